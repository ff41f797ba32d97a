#pragma once

// Two-objective Pareto machinery. Both objectives are maximized.

#include <cstddef>
#include <span>
#include <vector>

#include "reckless/errors.hpp"

namespace reckless {

struct ObjectivePoint {
    double one_minus_mae = 0;
    double coverage = 0;

    friend bool operator==(const ObjectivePoint&, const ObjectivePoint&) = default;
};

/// a >= b component-wise and a != b.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

/// Fast non-dominated sorting. Front 0 is the maximal set; indices inside a
/// front are ascending.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectivePoint> points);

/// Crowding distance within one front. Boundary points on either objective
/// get +infinity; interior points sum neighbor gaps normalized by the
/// objective's range (a zero range contributes nothing).
std::vector<double> crowding_distance(std::span<const ObjectivePoint> front);

/// Area dominated by `points` and bounded below by `reference`. Throws
/// DomainError if a point lies below the reference on either objective.
double hypervolume_2d(std::span<const ObjectivePoint> points, ObjectivePoint reference = {0.0, 0.0});

template <typename Genome>
struct EvaluatedIndividual {
    Genome genome{};
    ObjectivePoint fitness;
    int rank = 0;
    double crowding = 0;
};

template <typename Genome>
std::vector<ObjectivePoint> fitness_of(std::span<const EvaluatedIndividual<Genome>> individuals) {
    std::vector<ObjectivePoint> points;
    points.reserve(individuals.size());
    for (const auto& ind : individuals) points.push_back(ind.fitness);
    return points;
}

/// Assign non-dominated rank and per-front crowding distance in place.
template <typename Genome>
void rank_and_crowd(std::span<EvaluatedIndividual<Genome>> individuals) {
    const auto points = fitness_of<Genome>(individuals);
    const auto fronts = non_dominated_sort(points);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<ObjectivePoint> front_points;
        for (auto idx : fronts[f]) front_points.push_back(points[idx]);
        const auto crowd = crowding_distance(front_points);
        for (std::size_t j = 0; j < fronts[f].size(); ++j) {
            individuals[fronts[f][j]].rank = static_cast<int>(f);
            individuals[fronts[f][j]].crowding = crowd[j];
        }
    }
}

/// Indices of the non-dominated points, sorted by coverage ascending (ties by
/// 1-MAE, then original order).
std::vector<std::size_t> pareto_order(std::span<const ObjectivePoint> points);

template <typename Genome>
std::vector<EvaluatedIndividual<Genome>> pareto_front(std::span<const EvaluatedIndividual<Genome>> individuals) {
    if (individuals.empty()) throw ConfigError("pareto front of an empty population");
    const auto points = fitness_of<Genome>(individuals);
    std::vector<EvaluatedIndividual<Genome>> front;
    for (auto idx : pareto_order(points)) front.push_back(individuals[idx]);
    return front;
}

}  // namespace reckless
