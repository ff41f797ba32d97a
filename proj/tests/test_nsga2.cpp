#include <doctest.h>

#include <algorithm>
#include <random>

#include "reckless/nsga2.hpp"

using namespace reckless;

namespace {

const BoxSpace kUnitSquare{{0, 0}, {1, 1}};

ObjectivePoint identity_fitness(const std::vector<double>& g, int, int) { return {g[0], g[1]}; }

// Trade-off toy: moving along the front needs both genes.
ObjectivePoint tradeoff(const std::vector<double>& g, int, int) {
    return {g[0] * (1 - 0.5 * g[1]), g[1] * (1 - 0.5 * g[0])};
}

}  // namespace

TEST_CASE("toy fitness improves the front") {
    GaConfig config;
    config.population_size = 8;
    config.generations = 3;
    config.seed = 4;
    const auto r = nsga2_run(config, kUnitSquare, FitnessFn<std::vector<double>>(identity_fitness));
    REQUIRE(r.front_hypervolume.size() == 4);
    CHECK(r.front_hypervolume.back() > r.front_hypervolume.front());
    for (std::size_t g = 1; g < r.front_hypervolume.size(); ++g) {
        CHECK(r.front_hypervolume[g] >= r.front_hypervolume[g - 1]);
    }
    CHECK(r.population.size() == 8);
    for (const auto& ind : r.population) CHECK(kUnitSquare.contains(ind.genome));
}

TEST_CASE("elitism keeps the best front") {
    // Whenever the pool's first front fits in the population, survivors carry
    // it unchanged. Otherwise both extreme points of the front survive.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<EvaluatedIndividual<std::vector<double>>> pool;
        const int n = 8 + trial % 24;
        for (int j = 0; j < n; ++j) {
            const std::vector<double> g{u(rng), u(rng)};
            pool.push_back({g, tradeoff(g, 0, 0), 0, 0});
        }
        const auto points = fitness_of<std::vector<double>>(pool);
        const auto first = non_dominated_sort(points).front();
        std::vector<ObjectivePoint> best;
        for (auto idx : first) best.push_back(points[idx]);
        const std::size_t target = 4 + trial % 8;
        const auto next = nsga2_survivors<std::vector<double>>(pool, target);
        REQUIRE(next.size() == target);
        std::vector<ObjectivePoint> kept;
        for (const auto& ind : next) {
            if (ind.rank == 0) kept.push_back(ind.fitness);
        }
        if (first.size() <= target) {
            CHECK(hypervolume_2d(kept) == hypervolume_2d(best));
        } else {
            auto by_quality = [](const ObjectivePoint& a, const ObjectivePoint& b) {
                return a.one_minus_mae < b.one_minus_mae;
            };
            CHECK(std::max_element(kept.begin(), kept.end(), by_quality)->one_minus_mae ==
                  std::max_element(best.begin(), best.end(), by_quality)->one_minus_mae);
            auto by_coverage = [](const ObjectivePoint& a, const ObjectivePoint& b) { return a.coverage < b.coverage; };
            CHECK(std::max_element(kept.begin(), kept.end(), by_coverage)->coverage ==
                  std::max_element(best.begin(), best.end(), by_coverage)->coverage);
        }
    }
}

TEST_CASE("no variation preserves the gene multiset") {
    GaConfig config;
    config.population_size = 10;
    config.mutation_probability = 0;
    config.crossover_probability = 0;
    std::mt19937_64 rng(1);
    std::vector<EvaluatedIndividual<std::vector<double>>> pop;
    for (int j = 0; j < 10; ++j) {
        const auto g = kUnitSquare.sample(rng);
        pop.push_back({g, {g[0], g[1]}, 0, 0});
    }
    const auto kids = nsga2_offspring<BoxSpace>(pop, kUnitSquare, config, rng);
    REQUIRE(kids.size() == 10);
    for (const auto& kid : kids) {
        CHECK(std::any_of(pop.begin(), pop.end(), [&](const auto& p) { return p.genome == kid; }));
    }
}

TEST_CASE("deterministic per seed") {
    GaConfig config;
    config.population_size = 12;
    config.generations = 5;
    config.seed = 77;
    const auto a = nsga2_run(config, kUnitSquare, FitnessFn<std::vector<double>>(tradeoff));
    const auto b = nsga2_run(config, kUnitSquare, FitnessFn<std::vector<double>>(tradeoff));
    REQUIRE(a.population.size() == b.population.size());
    for (std::size_t j = 0; j < a.population.size(); ++j) CHECK(a.population[j].genome == b.population[j].genome);

    config.threads = 4;
    const auto c = nsga2_run(config, kUnitSquare, FitnessFn<std::vector<double>>(tradeoff));
    for (std::size_t j = 0; j < a.population.size(); ++j) CHECK(a.population[j].genome == c.population[j].genome);
}

TEST_CASE("observer sees every evaluation in order") {
    GaConfig config;
    config.population_size = 6;
    config.generations = 2;
    std::vector<std::pair<int, int>> seen;
    nsga2_run(config, kUnitSquare, FitnessFn<std::vector<double>>(identity_fitness),
              EvaluationObserver<std::vector<double>>(
                  [&](int gen, int idx, const auto&) { seen.emplace_back(gen, idx); }));
    REQUIRE(seen.size() == 18);
    for (int j = 0; j < 18; ++j) CHECK(seen[static_cast<std::size_t>(j)] == std::pair{j / 6, j % 6});
}

TEST_CASE("survivor selection keeps whole fronts then the least crowded") {
    using Ind = EvaluatedIndividual<int>;
    std::vector<Ind> pool{{0, {0.0, 1.0}}, {1, {0.5, 0.5}}, {2, {1.0, 0.0}}, {3, {0.45, 0.45}},
                          {4, {0.1, 0.1}},  {5, {0.26, 0.74}}, {6, {0.24, 0.76}}};
    const auto next = nsga2_survivors<int>(pool, 4);
    std::vector<int> ids;
    for (const auto& ind : next) ids.push_back(ind.genome);
    std::sort(ids.begin(), ids.end());
    // Front 0 is {0,1,2,5,6}: both boundary points and the isolated 1 survive; 5 and 6 tie.
    CHECK(ids.size() == 4);
    CHECK(std::count(ids.begin(), ids.end(), 0) == 1);
    CHECK(std::count(ids.begin(), ids.end(), 2) == 1);
    CHECK(std::count(ids.begin(), ids.end(), 1) == 1);
}

TEST_CASE("parallel_map collects by index and rethrows") {
    const auto squares = parallel_map<int>(100, 4, [](std::size_t j) { return static_cast<int>(j * j); });
    for (std::size_t j = 0; j < 100; ++j) CHECK(squares[j] == static_cast<int>(j * j));
    CHECK_THROWS_AS(parallel_map<int>(10, 3,
                                      [](std::size_t j) -> int {
                                          if (j == 7) throw DataError("boom");
                                          return 0;
                                      }),
                    DataError);
}

TEST_CASE("config validation") {
    GaConfig config;
    config.population_size = 1;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.mutation_probability = 1.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = {};
    config.generations = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    CHECK_NOTHROW(GaConfig{}.validate());
}
