#pragma once

// NSGA-II over an arbitrary genome space.
//
// Each generation: binary (or k-ary) tournament on (rank, crowding), crossover
// with probability p_c, per-gene mutation with probability p_m, evaluation of
// the offspring, and elitist survivor selection from parents + offspring by
// non-dominated rank and then crowding distance.

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "reckless/errors.hpp"
#include "reckless/moo.hpp"

namespace reckless {

struct GaConfig {
    int population_size = 100;
    int generations = 150;
    int tournament_size = 2;
    double mutation_probability = 0.01;
    double crossover_probability = 0.9;
    std::uint64_t seed = 0;
    int cv_folds = 5;
    /// Concurrent fitness evaluations per generation.
    int threads = 1;

    void validate() const {
        if (population_size < 2) throw ConfigError("ga: population must be >= 2");
        if (generations < 1) throw ConfigError("ga: generations must be >= 1");
        if (tournament_size < 1) throw ConfigError("ga: tournament size must be >= 1");
        if (!(mutation_probability >= 0 && mutation_probability <= 1)) {
            throw ConfigError("ga: mutation probability must lie in [0,1]");
        }
        if (!(crossover_probability >= 0 && crossover_probability <= 1)) {
            throw ConfigError("ga: crossover probability must lie in [0,1]");
        }
        if (cv_folds < 2) throw ConfigError("ga: cv folds must be >= 2");
        if (threads < 1) throw ConfigError("ga: threads must be >= 1");
    }
};

template <typename S>
concept GenomeSpace = requires(const S& space, const typename S::Genome& g, std::mt19937_64& rng, double p) {
    { space.sample(rng) } -> std::same_as<typename S::Genome>;
    { space.crossover(g, g, rng) } -> std::same_as<typename S::Genome>;
    { space.mutate(g, p, rng) } -> std::same_as<typename S::Genome>;
    { space.contains(g) } -> std::convertible_to<bool>;
};

/// Real box [lo_j, hi_j]: intermediate recombination, uniform resampling mutation.
struct BoxSpace {
    using Genome = std::vector<double>;

    std::vector<double> lower;
    std::vector<double> upper;

    Genome sample(std::mt19937_64& rng) const {
        Genome g(lower.size());
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = std::uniform_real_distribution<double>(lower[j], upper[j])(rng);
        return g;
    }
    Genome crossover(const Genome& a, const Genome& b, std::mt19937_64& rng) const {
        Genome child(a.size());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t j = 0; j < a.size(); ++j) child[j] = a[j] + unit(rng) * (b[j] - a[j]);
        return child;
    }
    Genome mutate(const Genome& g, double p, std::mt19937_64& rng) const {
        Genome out = g;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (unit(rng) < p) out[j] = std::uniform_real_distribution<double>(lower[j], upper[j])(rng);
        }
        return out;
    }
    bool contains(const Genome& g) const {
        if (g.size() != lower.size()) return false;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (g[j] < lower[j] || g[j] > upper[j]) return false;
        }
        return true;
    }
};

/// Evaluate fn(0..n-1) on up to `threads` workers; results land by index.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t n, int threads, Fn&& fn) {
    std::vector<Result> out(n);
    if (threads <= 1 || n <= 1) {
        for (std::size_t j = 0; j < n; ++j) out[j] = fn(j);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
        for (std::size_t w = 0; w < count; ++w) {
            workers.emplace_back([&] {
                for (std::size_t j = next++; j < n; j = next++) {
                    try {
                        out[j] = fn(j);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

template <typename Genome>
using FitnessFn = std::function<ObjectivePoint(const Genome& genome, int generation, int index)>;

/// Called once per evaluated individual, in index order within a generation.
template <typename Genome>
using EvaluationObserver = std::function<void(int generation, int index, const EvaluatedIndividual<Genome>&)>;

namespace detail {

template <typename Genome>
std::size_t tournament(std::span<const EvaluatedIndividual<Genome>> pop, int size, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (int t = 1; t < size; ++t) {
        const std::size_t c = pick(rng);
        const auto& a = pop[c];
        const auto& b = pop[best];
        if (a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)) best = c;
    }
    return best;
}

}  // namespace detail

/// Variation step: one offspring genome per population slot.
template <GenomeSpace S>
std::vector<typename S::Genome> nsga2_offspring(std::span<const EvaluatedIndividual<typename S::Genome>> pop,
                                                const S& space, const GaConfig& config, std::mt19937_64& rng) {
    std::vector<typename S::Genome> children;
    children.reserve(pop.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const auto& a = pop[detail::tournament(pop, config.tournament_size, rng)].genome;
        const auto& b = pop[detail::tournament(pop, config.tournament_size, rng)].genome;
        auto child = unit(rng) < config.crossover_probability ? space.crossover(a, b, rng) : a;
        children.push_back(space.mutate(child, config.mutation_probability, rng));
    }
    return children;
}

/// Elitist truncation of `pool` to `target` individuals: whole fronts first,
/// the last partial front by descending crowding distance.
template <typename Genome>
std::vector<EvaluatedIndividual<Genome>> nsga2_survivors(std::vector<EvaluatedIndividual<Genome>> pool,
                                                         std::size_t target) {
    rank_and_crowd<Genome>(pool);
    const auto fronts = non_dominated_sort(fitness_of<Genome>(pool));
    std::vector<EvaluatedIndividual<Genome>> next;
    next.reserve(target);
    for (const auto& front : fronts) {
        if (next.size() + front.size() <= target) {
            for (auto idx : front) next.push_back(pool[idx]);
        } else {
            auto order = front;
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return pool[a].crowding > pool[b].crowding; });
            for (std::size_t j = 0; next.size() < target; ++j) next.push_back(pool[order[j]]);
        }
        if (next.size() == target) break;
    }
    rank_and_crowd<Genome>(next);
    return next;
}

template <GenomeSpace S>
struct Nsga2Result {
    using Genome = typename S::Genome;
    std::vector<EvaluatedIndividual<Genome>> population;
    /// Hypervolume (reference (0,0)) of the best front after each generation, initial population first.
    std::vector<double> front_hypervolume;
};

template <GenomeSpace S>
Nsga2Result<S> nsga2_run(const GaConfig& config, const S& space, const FitnessFn<typename S::Genome>& fitness,
                         const EvaluationObserver<typename S::Genome>& observe = {}) {
    using Genome = typename S::Genome;
    config.validate();
    std::mt19937_64 rng(config.seed);

    auto evaluate = [&](std::vector<Genome> genomes, int generation) {
        auto points = parallel_map<ObjectivePoint>(genomes.size(), config.threads, [&](std::size_t j) {
            return fitness(genomes[j], generation, static_cast<int>(j));
        });
        std::vector<EvaluatedIndividual<Genome>> out;
        out.reserve(genomes.size());
        for (std::size_t j = 0; j < genomes.size(); ++j) {
            out.push_back({std::move(genomes[j]), points[j], 0, 0.0});
            if (observe) observe(generation, static_cast<int>(j), out.back());
        }
        return out;
    };
    auto best_front_volume = [](std::span<const EvaluatedIndividual<Genome>> pop) {
        std::vector<ObjectivePoint> front;
        for (const auto& ind : pop) {
            if (ind.rank == 0) front.push_back(ind.fitness);
        }
        return hypervolume_2d(front);
    };

    std::vector<Genome> initial;
    for (int j = 0; j < config.population_size; ++j) initial.push_back(space.sample(rng));
    Nsga2Result<S> result;
    result.population = evaluate(std::move(initial), 0);
    rank_and_crowd<Genome>(result.population);
    result.front_hypervolume.push_back(best_front_volume(result.population));

    for (int gen = 1; gen <= config.generations; ++gen) {
        auto children = evaluate(nsga2_offspring<S>(result.population, space, config, rng), gen);
        auto pool = std::move(result.population);
        pool.insert(pool.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
        result.population = nsga2_survivors<Genome>(std::move(pool), static_cast<std::size_t>(config.population_size));
        result.front_hypervolume.push_back(best_front_volume(result.population));
    }
    return result;
}

}  // namespace reckless
