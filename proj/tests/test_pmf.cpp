#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "reckless/evaluation.hpp"
#include "reckless/pmf.hpp"

using namespace reckless;
using doctest::Approx;

namespace {

ScoreScale five() { return ScoreScale::range(1, 5, 1); }

RatingsMatrix fixture() {
    return RatingsMatrix(4, 3, five(),
                         {{0, 0, 4}, {0, 1, 3}, {1, 0, 4}, {1, 2, 0}, {2, 1, 1}, {2, 2, 2}, {3, 0, 3}, {3, 2, 1}});
}

PmfParams<double> one_by_one(double dot) {
    PmfParams<double> p{PmfParams<double>::Matrix::Constant(1, 1, dot), PmfParams<double>::Matrix::Constant(1, 1, 1)};
    return p;
}

}  // namespace

TEST_CASE("single rating converges to its value") {
    const RatingsMatrix one(1, 1, five(), {{0, 0, 2}});
    PmfHyper hyper;
    hyper.factors = 1;
    hyper.l2 = 0;
    hyper.learning_rate = 0.05;
    hyper.epochs = 500;
    hyper.init_stddev = 0.5;
    hyper.seed = 1;
    const auto fit = pmf_train(one, hyper);
    const double dot = fit.params.user_factors(0, 0) * fit.params.item_factors(0, 0);
    CHECK(std::abs(dot - 3) <= 0.05);
}

TEST_CASE("gradient matches finite differences") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0, 0.7);
    const auto data = fixture();
    for (double l2 : {0.0, 0.1}) {
        PmfParams<double> p{PmfParams<double>::Matrix(4, 3), PmfParams<double>::Matrix(3, 3)};
        for (auto& v : p.user_factors.reshaped()) v = n(rng);
        for (auto& v : p.item_factors.reshaped()) v = n(rng);
        const auto g = pmf_gradient(p, data, l2);
        const double h = 1e-5;
        auto probe = [&](auto& m, const auto& gm) {
            for (Eigen::Index j = 0; j < m.size(); ++j) {
                const double keep = m.data()[j];
                m.data()[j] = keep + h;
                const double up = pmf_cost(p, data, l2);
                m.data()[j] = keep - h;
                const double down = pmf_cost(p, data, l2);
                m.data()[j] = keep;
                const double fd = (up - down) / (2 * h);
                CHECK(std::abs(fd - gm.data()[j]) / std::max(1.0, std::abs(fd)) <= 1e-4);
            }
        };
        probe(p.user_factors, g.user_factors);
        probe(p.item_factors, g.item_factors);
    }
}

TEST_CASE("training is deterministic and reduces squared error") {
    PmfHyper hyper;
    hyper.factors = 3;
    hyper.seed = 9;
    hyper.epochs = 100;
    const auto a = pmf_train(fixture(), hyper);
    const auto b = pmf_train(fixture(), hyper);
    CHECK(a.params == b.params);
    CHECK(a.epoch_squared_error.size() == 100);
    CHECK(a.epoch_squared_error.back() < a.epoch_squared_error.front());
}

TEST_CASE("prediction clamps to the score range") {
    auto p = pmf_predict(one_by_one(3.7), 0, 0, five());
    CHECK(p.score == Approx(3.7));
    CHECK(p.reliability == 1.0);
    p = pmf_predict(one_by_one(7.2), 0, 0, five());
    CHECK(p.score == 5.0);
    CHECK(p.reliability == 1.0);
    p = pmf_predict(one_by_one(-2), 0, 0, five());
    CHECK(p.score == 1.0);
    CHECK_THROWS_AS(pmf_predict(one_by_one(1), 1, 0, five()), DomainError);
}

TEST_CASE("baseline evaluation has full coverage") {
    PmfHyper hyper;
    hyper.factors = 2;
    hyper.epochs = 20;
    hyper.learning_rate = 0.05;
    const auto data = fixture();
    const PmfModel model{pmf_train(data, hyper).params, five()};
    const auto e = evaluate(model, data, 20);
    CHECK(e.score.coverage == 1.0);
    for (const auto& row : e.curve.rows) CHECK(row.coverage == 1.0);
    for (const auto& r : predict_testset(model, data)) {
        CHECK(r.predicted_score >= 1.0);
        CHECK(r.predicted_score <= 5.0);
        CHECK(r.reliability == 1.0);
    }
}

TEST_CASE("hyperparameter validation") {
    PmfHyper hyper;
    hyper.learning_rate = 0;
    CHECK_THROWS_AS(hyper.validate(), ConfigError);
    hyper = {};
    hyper.factors = 0;
    CHECK_THROWS_AS(hyper.validate(), ConfigError);
}
