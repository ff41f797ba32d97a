#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "reckless/tuning.hpp"

using namespace reckless;
namespace fs = std::filesystem;

namespace {

RatingsMatrix planted(std::uint64_t seed) {
    const auto scale = ScoreScale::range(1, 5, 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    std::bernoulli_distribution keep(0.4);
    std::vector<RatingTriple> e;
    for (Index u = 0; u < 20; ++u) {
        for (Index i = 0; i < 15; ++i) {
            if (keep(rng)) e.push_back({u, i, std::clamp<Index>(std::lround(2 + n(rng)), 0, 4)});
        }
    }
    return RatingsMatrix(20, 15, scale, e);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("genome space respects ranges") {
    const BemfGenomeSpace space;
    std::mt19937_64 rng(1);
    bool saw_negative = false;
    for (int n = 0; n < 500; ++n) {
        const auto a = space.sample(rng);
        const auto b = space.sample(rng);
        CHECK(space.contains(a));
        CHECK(space.contains(space.crossover(a, b, rng)));
        CHECK(space.contains(space.mutate(a, 0.5, rng)));
        saw_negative |= a.recklessness < 0;
    }
    CHECK(saw_negative);

    const BemfGenomeSpace pinned({}, false);
    for (int n = 0; n < 200; ++n) {
        const auto a = pinned.sample(rng);
        CHECK(a.recklessness == 0.0);
        CHECK(pinned.mutate(pinned.crossover(a, pinned.sample(rng), rng), 1.0, rng).recklessness == 0.0);
    }
    Genome off;
    off.recklessness = 0.5;
    CHECK(!pinned.contains(off));
}

TEST_CASE("learning rate is sampled log-uniformly") {
    const BemfGenomeSpace space;
    std::mt19937_64 rng(2);
    int below = 0;
    const int n = 4000;
    for (int j = 0; j < n; ++j) below += space.sample(rng).learning_rate < std::sqrt(1e-4 * 0.5);
    CHECK(std::abs(below / static_cast<double>(n) - 0.5) < 0.05);
}

TEST_CASE("mutation with probability zero is the identity") {
    const BemfGenomeSpace space;
    std::mt19937_64 rng(3);
    const auto g = space.sample(rng);
    CHECK(space.mutate(g, 0.0, rng) == g);
}

TEST_CASE("seed derivation") {
    Genome a, b;
    b.l2 = 0.01;
    CHECK(genome_hash(a) == genome_hash(a));
    CHECK(genome_hash(a) != genome_hash(b));
    CHECK(derive_seed(1, genome_hash(a), 0) != derive_seed(1, genome_hash(a), 1));
    CHECK(derive_seed(1, genome_hash(a), 0) != derive_seed(2, genome_hash(a), 0));
    CHECK(to_hyper(b, BemfHyper{}, 99).seed == 99);
    CHECK(to_hyper(b, BemfHyper{}, 99).l2 == 0.01);
}

TEST_CASE("cv fitness is the mean of per-fold holdouts") {
    const auto data = planted(4);
    const auto folds = kfold(data, 3, 8);
    Genome g;
    g.factors = 2;
    g.epochs = 10;
    g.learning_rate = 0.05;
    g.recklessness = 0.3;
    const auto cv = cv_fitness(g, data, folds, 20, BemfHyper{}, 123);
    double q = 0, c = 0;
    for (int f = 0; f < 3; ++f) {
        const auto h = holdout_fitness(g, fold_split(data, folds, f), 20, BemfHyper{},
                                       derive_seed(123, genome_hash(g), f));
        q += h.fitness.one_minus_mae;
        c += h.fitness.coverage;
    }
    CHECK(cv.fitness.one_minus_mae == doctest::Approx(q / 3).epsilon(1e-15));
    CHECK(cv.fitness.coverage == doctest::Approx(c / 3).epsilon(1e-15));
    CHECK(!cv.diverged);

    const auto again = cv_fitness(g, data, folds, 20, BemfHyper{}, 123);
    CHECK(again.fitness == cv.fitness);
}

TEST_CASE("divergent genomes get the worst point") {
    const auto data = planted(5);
    const auto folds = kfold(data, 2, 1);
    BemfHyper base;
    base.init_stddev = 1e100;
    Genome g;
    g.learning_rate = 0.5;
    const auto r = cv_fitness(g, data, folds, 20, base, 1);
    CHECK(r.diverged);
    CHECK(r.fitness == ObjectivePoint{0, 0});
    CHECK(!r.message.empty());
}

TEST_CASE("ledger and front files round trip") {
    const auto dir = fs::temp_directory_path() / "reckless_tuning_io";
    fs::create_directories(dir);
    Genome g{3, 0.0123, 0.05, -0.75, 40};
    {
        RunLedger ledger(dir / "ledger.jsonl");
        ledger.append(0, 0, g, {{0.8, 0.6}, false, {}});
        ledger.append(0, 1, g, {{0.0, 0.0}, true, "boom"});
    }
    const auto records = read_ledger(dir / "ledger.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].genome == g);
    CHECK(records[0].result.fitness == ObjectivePoint{0.8, 0.6});
    CHECK(records[1].result.diverged);
    CHECK(records[1].index == 1);

    std::vector<EvaluatedIndividual<Genome>> front{{g, {0.7, 0.1}, 0, 0}, {Genome{}, {0.5, 1.0 / 3.0}, 0, 0}};
    write_front_csv(front, dir / "front.csv");
    CHECK(slurp(dir / "front.csv").rfind("one_minus_mae,coverage,factors,learning_rate,l2,recklessness,epochs\n", 0) ==
          0);
    const auto back = read_front_csv(dir / "front.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].genome == g);
    CHECK(back[1].fitness == front[1].fitness);
    fs::remove_all(dir);
}
