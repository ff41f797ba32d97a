#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "reckless/bemf.hpp"
#include "reckless/evaluation.hpp"

using namespace reckless;
using doctest::Approx;

namespace {

const std::filesystem::path kData = RECKLESS_TEST_DATA;

ScoreScale five() { return ScoreScale::range(1, 5, 1); }

std::vector<PredictionRecord> fixture() {
    return {{0, 0, 4, 4, 0.9}, {1, 1, 2, 5, 0.5}, {2, 2, 3, 3, 0.7}};
}

/// Replays fixed predictions; lets the fixture go through evaluate().
struct TableModel {
    std::vector<PredictionRecord> table;

    Index num_users() const { return static_cast<Index>(table.size()); }
    Index num_items() const { return static_cast<Index>(table.size()); }
    Prediction predict(Index u, Index i) const {
        for (const auto& r : table) {
            if (r.user == u && r.item == i) return {r.predicted_score, r.reliability};
        }
        return {0, 0};
    }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("thresholded metrics on the three-record fixture") {
    const auto r = fixture();
    auto m = thresholded_metrics(r, 0.0, five());
    REQUIRE(m.mae);
    CHECK(*m.mae == 0.25);
    CHECK(m.coverage == 1.0);
    m = thresholded_metrics(r, 0.6, five());
    REQUIRE(m.mae);
    CHECK(*m.mae == 0.0);
    CHECK(m.coverage == 2.0 / 3.0);
    m = thresholded_metrics(r, 0.95, five());
    CHECK(!m.mae);
    CHECK(m.coverage == 0.0);
    m = thresholded_metrics(r, 0.9, five());
    CHECK(m.coverage == 1.0 / 3.0);

    CHECK_THROWS_AS(thresholded_metrics({}, 0.5, five()), DataError);
    CHECK_THROWS_AS(thresholded_metrics(r, 1.5, five()), ConfigError);
}

TEST_CASE("threshold grid") {
    CHECK(threshold_grid(5) == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
    CHECK(threshold_grid(2) == std::vector<double>{0, 1});
    const auto g = threshold_grid(20);
    REQUIRE(g.size() == 20);
    CHECK(g.front() == 0);
    CHECK(g.back() == 1);
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] - g[k - 1] == Approx(1.0 / 19));
    CHECK_THROWS_AS(threshold_grid(1), ConfigError);
}

TEST_CASE("aggregate weights") {
    for (int n = 2; n <= 100; ++n) {
        const auto w = aggregate_weights(n);
        REQUIRE(w.size() == static_cast<std::size_t>(n));
        CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1) < 1e-12);
        for (std::size_t k = 1; k < w.size(); ++k) CHECK(w[k] < w[k - 1]);
        CHECK(w.back() > 0);
    }
}

TEST_CASE("aggregate of the N=2 fixture") {
    const auto curve = threshold_curve(fixture(), 2, five());
    REQUIRE(curve.rows.size() == 2);
    CHECK(*curve.rows[0].mae == 0.25);
    CHECK(!curve.rows[1].mae);
    const auto s = aggregate(curve);
    CHECK(s.one_minus_mae == 0.5);
    CHECK(s.coverage == 2.0 / 3.0);
}

TEST_CASE("aggregate is linear and preserves constants") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int n = 2; n <= 60; ++n) {
        const double c = u(rng);
        ThresholdCurve flat;
        ThresholdCurve random;
        for (double t : threshold_grid(n)) {
            flat.rows.push_back({t, 1 - c, c});
            random.rows.push_back({t, u(rng), u(rng)});
        }
        const auto s = aggregate(flat);
        CHECK(std::abs(s.coverage - c) < 1e-12);
        CHECK(std::abs(s.one_minus_mae - c) < 1e-12);
        ThresholdCurve scaled = random;
        for (auto& row : scaled.rows) row.coverage *= 0.3;
        CHECK(std::abs(aggregate(scaled).coverage - 0.3 * aggregate(random).coverage) < 1e-12);
        ThresholdCurve ones = flat;
        for (auto& row : ones.rows) row.coverage = 1.0;
        CHECK(aggregate(ones).coverage == 1.0);
    }
}

TEST_CASE("evaluate composes to the fixture files") {
    TableModel model{fixture()};
    const RatingsMatrix test(3, 3, five(), {{0, 0, 3}, {1, 1, 1}, {2, 2, 2}});
    const auto e = evaluate(model, test, 2);
    CHECK(e.score.one_minus_mae == 0.5);
    CHECK(e.score.coverage == 2.0 / 3.0);
    CHECK(curve_csv(e.curve) == slurp(kData / "fixture_curve.csv"));
    CHECK(aggregate_json(e.score) == slurp(kData / "fixture_aggregate.json"));
}

TEST_CASE("predict_testset") {
    BemfModel zero{BemfParams<double>(2, 2, 5, 3), five()};
    CHECK(predict_testset(zero, RatingsMatrix(2, 2, five(), {})).empty());
    const RatingsMatrix test(2, 2, five(), {{1, 1, 0}, {0, 1, 2}, {0, 0, 4}});
    const auto r = predict_testset(zero, test);
    REQUIRE(r.size() == 3);
    CHECK(r[0].user == 0);
    CHECK(r[0].item == 0);
    CHECK(r[2].user == 1);
    for (const auto& rec : r) CHECK(rec.reliability == Approx(0.2).epsilon(1e-15));
    const RatingsMatrix wider(3, 2, five(), {{2, 0, 1}});
    CHECK_THROWS_AS(predict_testset(zero, wider), DataError);
}

TEST_CASE("curve properties on a random model") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n(0, 1.5);
    BemfModel model{BemfParams<double>(6, 6, 5, 3), five()};
    for (auto& v : model.params.user_factors().reshaped()) v = n(rng);
    for (auto& v : model.params.item_factors().reshaped()) v = n(rng);
    std::vector<RatingTriple> e;
    for (Index u = 0; u < 6; ++u) {
        for (Index i = 0; i < 6; ++i) e.push_back({u, i, (u * i) % 5});
    }
    const auto eval = evaluate(model, RatingsMatrix(6, 6, five(), e), 20);
    for (std::size_t k = 0; k < eval.curve.rows.size(); ++k) {
        const auto& row = eval.curve.rows[k];
        if (k > 0) CHECK(row.coverage <= eval.curve.rows[k - 1].coverage);
        CHECK(row.mae.has_value() == (row.coverage > 0));
        if (row.mae) {
            CHECK(*row.mae >= 0);
            CHECK(*row.mae <= 1);
        }
    }
    CHECK(eval.score.coverage >= 0);
    CHECK(eval.score.coverage <= 1);
    CHECK(eval.score.one_minus_mae >= 0);
    CHECK(eval.score.one_minus_mae <= 1);
}

TEST_CASE("minimum reliability filter keeps coverage relative to all records") {
    const auto plain = threshold_curve(fixture(), 5, five());
    const auto filtered = threshold_curve(fixture(), 5, five(), 0.6);
    CHECK(filtered.rows[0].coverage == 2.0 / 3.0);
    CHECK(*filtered.rows[0].mae == 0.0);
    CHECK(filtered.rows[4].coverage == plain.rows[4].coverage);
}
