#pragma once

// Distribution primitives over a finite score scale. Everything here is a pure
// function templated on the scalar type.

#include <cmath>
#include <concepts>

#include <Eigen/Core>

#include "reckless/dataset.hpp"

namespace reckless {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <std::floating_point Scalar>
Scalar sigmoid(Scalar x) {
    using std::exp;
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
    const Scalar e = exp(x);
    return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow; -log(sigmoid(x)) == softplus(-x).
template <std::floating_point Scalar>
Scalar softplus(Scalar x) {
    using std::exp;
    using std::log1p;
    return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

/// sm_k(s) = sigmoid(s_k) / sum_l sigmoid(s_l). Not shift-invariant, unlike
/// the exponential softmax.
template <typename Derived>
Vec<typename Derived::Scalar> softmax_of_sigmoid(const Eigen::MatrixBase<Derived>& dots) {
    Vec<typename Derived::Scalar> sig = sigmoid(dots);
    return sig / sig.sum();
}

template <typename Scalar = double>
struct RatingDistribution {
    ScoreScale scale;
    Vec<Scalar> probs;

    Index size() const { return static_cast<Index>(probs.size()); }
};

struct Prediction {
    double score = 0;
    double reliability = 0;
};

template <typename Scalar>
RatingDistribution<Scalar> make_distribution(const ScoreScale& scale, Vec<Scalar> probs) {
    return {scale, std::move(probs)};
}

/// Mode of the distribution and its probability. Ties resolve to the smallest
/// score index.
template <typename Scalar>
Prediction mode_and_reliability(const RatingDistribution<Scalar>& d) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < d.probs.size(); ++k) {
        if (d.probs(k) > d.probs(best)) best = k;
    }
    return {d.scale[best], static_cast<double>(d.probs(best))};
}

/// E[X] with X the identity on the scale.
template <typename Scalar>
Scalar expectation(const RatingDistribution<Scalar>& d) {
    return d.scale.values().template cast<Scalar>().dot(d.probs);
}

/// E[X^2] - E[X]^2.
template <typename Scalar>
Scalar variance(const RatingDistribution<Scalar>& d) {
    const Vec<Scalar> x = d.scale.values().template cast<Scalar>();
    const Scalar mean = x.dot(d.probs);
    const Scalar second = x.cwiseAbs2().dot(d.probs);
    const Scalar v = second - mean * mean;
    return v < Scalar(0) ? Scalar(0) : v;
}

}  // namespace reckless
