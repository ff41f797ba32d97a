#pragma once

// Real-valued matrix factorization baseline trained with squared-error SGD:
//   minimize sum_observed (r_ui - p_u . q_i)^2 + lambda (|p_u|^2 + |q_i|^2)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "reckless/dataset.hpp"
#include "reckless/errors.hpp"
#include "reckless/probcore.hpp"

namespace reckless {

struct PmfHyper {
    int factors = 8;
    double learning_rate = 0.01;
    double l2 = 0.05;
    int epochs = 50;
    std::uint64_t seed = 0;
    double init_stddev = 0.1;

    void validate() const {
        if (factors < 1) throw ConfigError("pmf: factors must be >= 1");
        if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("pmf: learning rate must be > 0");
        if (!(l2 >= 0) || !std::isfinite(l2)) throw ConfigError("pmf: l2 must be >= 0");
        if (epochs < 1) throw ConfigError("pmf: epochs must be >= 1");
        if (!(init_stddev > 0)) throw ConfigError("pmf: init stddev must be > 0");
    }
};

template <typename Scalar = double>
struct PmfParams {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Matrix user_factors;  // U x D
    Matrix item_factors;  // I x D

    Index num_users() const { return user_factors.rows(); }
    Index num_items() const { return item_factors.rows(); }
    Index num_factors() const { return user_factors.cols(); }

    friend bool operator==(const PmfParams& a, const PmfParams& b) {
        return a.user_factors.rows() == b.user_factors.rows() && a.item_factors.rows() == b.item_factors.rows() &&
               a.user_factors.cols() == b.user_factors.cols() && a.user_factors == b.user_factors &&
               a.item_factors == b.item_factors;
    }
};

template <typename Scalar>
Scalar pmf_cost(const PmfParams<Scalar>& params, const RatingsMatrix& data, double l2) {
    Scalar total(0);
    const auto lambda = static_cast<Scalar>(l2);
    for (const auto& t : data.entries()) {
        const auto p = params.user_factors.row(t.user);
        const auto q = params.item_factors.row(t.item);
        const Scalar err = static_cast<Scalar>(data.score(t)) - p.dot(q);
        total += err * err + lambda * (p.squaredNorm() + q.squaredNorm());
    }
    return total;
}

template <typename Scalar>
PmfParams<Scalar> pmf_gradient(const PmfParams<Scalar>& params, const RatingsMatrix& data, double l2) {
    PmfParams<Scalar> grad{PmfParams<Scalar>::Matrix::Zero(params.num_users(), params.num_factors()),
                           PmfParams<Scalar>::Matrix::Zero(params.num_items(), params.num_factors())};
    const auto lambda = static_cast<Scalar>(l2);
    for (const auto& t : data.entries()) {
        const auto p = params.user_factors.row(t.user);
        const auto q = params.item_factors.row(t.item);
        const Scalar err = static_cast<Scalar>(data.score(t)) - p.dot(q);
        grad.user_factors.row(t.user) += Scalar(-2) * err * q + Scalar(2) * lambda * p;
        grad.item_factors.row(t.item) += Scalar(-2) * err * p + Scalar(2) * lambda * q;
    }
    return grad;
}

template <typename Scalar = double>
struct PmfFit {
    PmfParams<Scalar> params;
    std::vector<double> epoch_squared_error;
};

template <typename Scalar = double>
PmfFit<Scalar> pmf_train(const RatingsMatrix& train, const PmfHyper& hyper) {
    hyper.validate();
    if (train.empty()) throw ConfigError("pmf: empty training set");
    using Matrix = typename PmfParams<Scalar>::Matrix;
    std::mt19937_64 rng(hyper.seed);
    std::normal_distribution<double> normal(0.0, hyper.init_stddev);
    PmfFit<Scalar> fit{{Matrix(train.num_users(), hyper.factors), Matrix(train.num_items(), hyper.factors)}, {}};
    for (auto* m : {&fit.params.user_factors, &fit.params.item_factors}) {
        for (Eigen::Index j = 0; j < m->size(); ++j) m->data()[j] = static_cast<Scalar>(normal(rng));
    }

    const auto entries = train.entries();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto eta = static_cast<Scalar>(hyper.learning_rate);
    const auto lambda = static_cast<Scalar>(hyper.l2);
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> p_old(hyper.factors);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t j : order) {
            const auto& t = entries[j];
            auto p = fit.params.user_factors.row(t.user);
            auto q = fit.params.item_factors.row(t.item);
            const Scalar err = static_cast<Scalar>(train.score(t)) - p.dot(q);
            p_old = p;
            p += eta * Scalar(2) * (err * q - lambda * p);
            q += eta * Scalar(2) * (err * p_old - lambda * q);
            if (!p.allFinite() || !q.allFinite()) {
                throw DivergenceError(fmt::format("pmf: diverged in epoch {} at pair (user {}, item {})", epoch,
                                                  train.raw_user(t.user), train.raw_item(t.item)));
            }
        }
        fit.epoch_squared_error.push_back(static_cast<double>(pmf_cost(fit.params, train, 0.0)));
    }
    return fit;
}

template <typename Scalar>
Prediction pmf_predict(const PmfParams<Scalar>& params, Index u, Index i, const ScoreScale& scale) {
    if (u < 0 || u >= params.num_users() || i < 0 || i >= params.num_items()) {
        throw DomainError(fmt::format("pmf: pair ({}, {}) outside a {}x{} model", u, i, params.num_users(),
                                      params.num_items()));
    }
    const auto raw = static_cast<double>(params.user_factors.row(u).dot(params.item_factors.row(i)));
    return {std::clamp(raw, scale.min(), scale.max()), 1.0};
}

struct PmfModel {
    PmfParams<double> params;
    ScoreScale scale;

    Index num_users() const { return params.num_users(); }
    Index num_items() const { return params.num_items(); }
    Prediction predict(Index u, Index i) const { return pmf_predict(params, u, i, scale); }
};

}  // namespace reckless
