#include "reckless/moo.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace reckless {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
    return a.one_minus_mae >= b.one_minus_mae && a.coverage >= b.coverage &&
           (a.one_minus_mae > b.one_minus_mae || a.coverage > b.coverage);
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectivePoint> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (dominates(points[p], points[q])) {
                dominated_by[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) fronts[0].push_back(p);
    }
    while (true) {
        std::vector<std::size_t> next;
        for (auto p : fronts.back()) {
            for (auto q : dominated_by[p]) {
                if (--domination_count[q] == 0) next.push_back(q);
            }
        }
        if (next.empty()) break;
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    if (fronts.front().empty()) fronts.clear();
    return fronts;
}

std::vector<double> crowding_distance(std::span<const ObjectivePoint> front) {
    const std::size_t n = front.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), inf);
        return distance;
    }
    for (auto objective : {&ObjectivePoint::one_minus_mae, &ObjectivePoint::coverage}) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a].*objective < front[b].*objective; });
        const double lo = front[order.front()].*objective;
        const double hi = front[order.back()].*objective;
        distance[order.front()] = inf;
        distance[order.back()] = inf;
        if (hi <= lo) continue;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            distance[order[j]] += (front[order[j + 1]].*objective - front[order[j - 1]].*objective) / (hi - lo);
        }
    }
    return distance;
}

double hypervolume_2d(std::span<const ObjectivePoint> points, ObjectivePoint reference) {
    for (const auto& p : points) {
        if (p.one_minus_mae < reference.one_minus_mae || p.coverage < reference.coverage) {
            throw DomainError(fmt::format("point ({}, {}) lies below the hypervolume reference ({}, {})",
                                          p.one_minus_mae, p.coverage, reference.one_minus_mae, reference.coverage));
        }
    }
    std::vector<ObjectivePoint> sorted(points.begin(), points.end());
    // First objective descending; among equals the larger second objective first.
    std::sort(sorted.begin(), sorted.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
        return a.one_minus_mae != b.one_minus_mae ? a.one_minus_mae > b.one_minus_mae : a.coverage > b.coverage;
    });
    double volume = 0.0;
    double covered = reference.coverage;
    for (const auto& p : sorted) {
        if (p.coverage > covered) {
            volume += (p.one_minus_mae - reference.one_minus_mae) * (p.coverage - covered);
            covered = p.coverage;
        }
    }
    return volume;
}

std::vector<std::size_t> pareto_order(std::span<const ObjectivePoint> points) {
    auto fronts = non_dominated_sort(points);
    if (fronts.empty()) return {};
    auto front = std::move(fronts.front());
    std::stable_sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
        return points[a].coverage != points[b].coverage ? points[a].coverage < points[b].coverage
                                                        : points[a].one_minus_mae < points[b].one_minus_mae;
    });
    return front;
}

}  // namespace reckless
