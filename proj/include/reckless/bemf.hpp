#pragma once

// Bernoulli matrix factorization with a variance ("recklessness") regularizer.
//
// Each score x_k owns a latent plane: p_u^k for users and q_i^k for items.
// The dot s_k = p_u^k . q_i^k drives an independent Bernoulli "is the rating
// x_k?" and the predicted distribution is sm_k(s) = sigmoid(s_k) / sum_l sigmoid(s_l).
//
// Per observed pair (u, i) with rating x_r the loss is
//
//   L = -log sigmoid(s_r) - sum_{k != r} log(1 - sigmoid(s_k))
//       - alpha * Var(sm)  +  beta/2 (|P_u|^2 + |Q_i|^2)
//
// and the training cost is the sum of L over observed pairs. Positive alpha
// rewards spiky, high-variance distributions; negative alpha flattens them.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "reckless/dataset.hpp"
#include "reckless/errors.hpp"
#include "reckless/probcore.hpp"

namespace reckless {

/// How the derivative of the sigmoid-normalized softmax enters the variance term.
///  - paper: d sm_t / d s_k taken as sm_t (delta_tk - sm_k), paired with the
///    plane-t factor vector inside the sum over t.
///  - exact: the true derivative sm_t (delta_tk - sm_k)(1 - sigmoid(s_k)),
///    i.e. plain gradient descent on L.
enum class GradientMode { paper, exact };

struct BemfHyper {
    int factors = 4;
    double learning_rate = 0.02;
    double l2 = 0.0;
    double recklessness = 0.0;
    int epochs = 50;
    double init_stddev = 0.1;
    std::uint64_t seed = 0;
    GradientMode gradient_mode = GradientMode::paper;

    void validate() const {
        if (factors < 1) throw ConfigError("bemf: factors must be >= 1");
        if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("bemf: learning rate must be > 0");
        if (!(l2 >= 0) || !std::isfinite(l2)) throw ConfigError("bemf: l2 must be >= 0");
        if (!std::isfinite(recklessness)) throw ConfigError("bemf: recklessness must be finite");
        if (epochs < 1) throw ConfigError("bemf: epochs must be >= 1");
        if (!(init_stddev > 0) || !std::isfinite(init_stddev)) throw ConfigError("bemf: init stddev must be > 0");
    }
};

template <typename Scalar = double>
class BemfParams {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Block = Eigen::Map<Matrix>;
    using ConstBlock = Eigen::Map<const Matrix>;

    BemfParams() = default;
    BemfParams(Index users, Index items, Index scores, Index factors)
        : scores_(scores), factors_(factors), users_(Matrix::Zero(users, scores * factors)),
          items_(Matrix::Zero(items, scores * factors)) {}

    Index num_users() const { return users_.rows(); }
    Index num_items() const { return items_.rows(); }
    Index num_scores() const { return scores_; }
    Index num_factors() const { return factors_; }

    /// s x D view; row k is p_u^k.
    Block user(Index u) { return Block(users_.row(u).data(), scores_, factors_); }
    ConstBlock user(Index u) const { return ConstBlock(users_.row(u).data(), scores_, factors_); }
    /// s x D view; row k is q_i^k.
    Block item(Index i) { return Block(items_.row(i).data(), scores_, factors_); }
    ConstBlock item(Index i) const { return ConstBlock(items_.row(i).data(), scores_, factors_); }

    /// Flat storage: U x (s*D) and I x (s*D), row-major.
    Matrix& user_factors() { return users_; }
    const Matrix& user_factors() const { return users_; }
    Matrix& item_factors() { return items_; }
    const Matrix& item_factors() const { return items_; }

    bool all_finite() const { return users_.allFinite() && items_.allFinite(); }

    friend bool operator==(const BemfParams& a, const BemfParams& b) {
        return a.scores_ == b.scores_ && a.factors_ == b.factors_ && a.users_.rows() == b.users_.rows() &&
               a.items_.rows() == b.items_.rows() && a.users_ == b.users_ && a.items_ == b.items_;
    }

private:
    Index scores_ = 0;
    Index factors_ = 0;
    Matrix users_;
    Matrix items_;
};

template <typename Scalar = double>
BemfParams<Scalar> bemf_init(Index users, Index items, const ScoreScale& scale, const BemfHyper& hyper,
                             std::mt19937_64& rng) {
    hyper.validate();
    if (users < 1 || items < 1) throw ConfigError("bemf: need at least one user and one item");
    BemfParams<Scalar> params(users, items, scale.size(), hyper.factors);
    std::normal_distribution<double> normal(0.0, hyper.init_stddev);
    for (auto* m : {&params.user_factors(), &params.item_factors()}) {
        for (Eigen::Index j = 0; j < m->size(); ++j) m->data()[j] = static_cast<Scalar>(normal(rng));
    }
    return params;
}

template <typename Scalar = double>
BemfParams<Scalar> bemf_init(Index users, Index items, const ScoreScale& scale, const BemfHyper& hyper) {
    std::mt19937_64 rng(hyper.seed);
    return bemf_init<Scalar>(users, items, scale, hyper, rng);
}

/// Scratch space for the per-pair kernel, sized once per (s, D).
template <typename Scalar>
struct PairWorkspace {
    using Matrix = typename BemfParams<Scalar>::Matrix;

    PairWorkspace(Index scores, Index factors)
        : dots(scores), sig(scores), sm(scores), coef(scores), g(scores), grad_user(scores, factors),
          grad_item(scores, factors), user_snapshot(scores, factors), item_snapshot(scores, factors) {}

    Vec<Scalar> dots, sig, sm, coef, g;
    Matrix grad_user, grad_item;
    Matrix user_snapshot, item_snapshot;
};

/// Gradient of the per-pair loss L (see file header) with respect to the
/// user block P (s x D) and item block Q (s x D), written to ws.grad_user and
/// ws.grad_item. In paper mode the variance part follows the published update
/// rule rather than the exact derivative.
template <typename Scalar, typename DerivedP, typename DerivedQ>
void bemf_pair_gradient(const Eigen::MatrixBase<DerivedP>& P, const Eigen::MatrixBase<DerivedQ>& Q,
                        Index rating, const Vec<Scalar>& x, const BemfHyper& hyper, PairWorkspace<Scalar>& ws) {
    const auto alpha = static_cast<Scalar>(hyper.recklessness);
    const auto beta = static_cast<Scalar>(hyper.l2);

    ws.dots = P.cwiseProduct(Q).rowwise().sum();
    ws.sig = sigmoid(ws.dots);
    ws.sm = ws.sig / ws.sig.sum();

    // d(-log-likelihood)/ds_k: sigmoid(s_k) - [k == r]
    ws.g = ws.sig;
    ws.g(rating) -= Scalar(1);

    // Var = sum_t x_t^2 sm_t - (sum_t x_t sm_t)^2, so dVar/dsm_t = x_t^2 - 2 E x_t.
    const Scalar mean = x.dot(ws.sm);
    ws.coef = x.cwiseAbs2() - Scalar(2) * mean * x;
    const Scalar coef_mean = ws.coef.dot(ws.sm);

    if (hyper.gradient_mode == GradientMode::exact || alpha == Scalar(0)) {
        // dVar/ds_k = (1 - sigmoid(s_k)) sm_k (coef_k - coef_mean)
        const Vec<Scalar> dvar = (Scalar(1) - ws.sig.array()) * ws.sm.array() * (ws.coef.array() - coef_mean);
        ws.g -= alpha * dvar;
        ws.grad_user.noalias() = ws.g.asDiagonal() * Q;
        ws.grad_item.noalias() = ws.g.asDiagonal() * P;
    } else {
        // sum_t coef_t sm_t (delta_tk - sm_k) v_t = sm_k coef_k v_k - sm_k sum_t coef_t sm_t v_t
        const Vec<Scalar> weights = ws.coef.cwiseProduct(ws.sm);
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> q_mix = weights.transpose() * Q;
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> p_mix = weights.transpose() * P;
        ws.grad_user.noalias() = ws.g.asDiagonal() * Q;
        ws.grad_item.noalias() = ws.g.asDiagonal() * P;
        ws.grad_user.noalias() -= alpha * (weights.asDiagonal() * Q - ws.sm * q_mix);
        ws.grad_item.noalias() -= alpha * (weights.asDiagonal() * P - ws.sm * p_mix);
    }
    if (beta != Scalar(0)) {
        ws.grad_user += beta * P;
        ws.grad_item += beta * Q;
    }
}

template <typename Scalar>
RatingDistribution<Scalar> predict_distribution(const BemfParams<Scalar>& params, const ScoreScale& scale, Index u,
                                                Index i) {
    if (u < 0 || u >= params.num_users() || i < 0 || i >= params.num_items()) {
        throw DomainError(fmt::format("bemf: pair ({}, {}) outside a {}x{} model", u, i, params.num_users(),
                                      params.num_items()));
    }
    const Vec<Scalar> dots = params.user(u).cwiseProduct(params.item(i)).rowwise().sum();
    return {scale, softmax_of_sigmoid(dots)};
}

/// Per-pair loss summed over every observed rating in `data`.
template <typename Scalar>
Scalar bemf_cost(const BemfParams<Scalar>& params, const RatingsMatrix& data, const BemfHyper& hyper) {
    if (data.empty()) throw ConfigError("bemf: cost over an empty rating set");
    const Vec<Scalar> x = data.scale().values().template cast<Scalar>();
    const auto alpha = static_cast<Scalar>(hyper.recklessness);
    const auto beta = static_cast<Scalar>(hyper.l2);
    Scalar total(0);
    for (const auto& t : data.entries()) {
        const auto P = params.user(t.user);
        const auto Q = params.item(t.item);
        const Vec<Scalar> dots = P.cwiseProduct(Q).rowwise().sum();
        Scalar loss(0);
        for (Eigen::Index k = 0; k < dots.size(); ++k) {
            loss += k == t.score_index ? softplus(Scalar(-dots(k))) : softplus(Scalar(dots(k)));
        }
        const Vec<Scalar> sm = softmax_of_sigmoid(dots);
        const Scalar mean = x.dot(sm);
        loss -= alpha * (x.cwiseAbs2().dot(sm) - mean * mean);
        loss += beta / Scalar(2) * (P.squaredNorm() + Q.squaredNorm());
        total += loss;
    }
    using std::isfinite;
    if (!isfinite(total)) throw DivergenceError("bemf: non-finite cost");
    return total;
}

/// Full gradient of bemf_cost, accumulated pair by pair with the same kernel
/// SGD uses.
template <typename Scalar>
BemfParams<Scalar> bemf_gradient(const BemfParams<Scalar>& params, const RatingsMatrix& data,
                                 const BemfHyper& hyper) {
    BemfParams<Scalar> grad(params.num_users(), params.num_items(), params.num_scores(), params.num_factors());
    PairWorkspace<Scalar> ws(params.num_scores(), params.num_factors());
    const Vec<Scalar> x = data.scale().values().template cast<Scalar>();
    for (const auto& t : data.entries()) {
        bemf_pair_gradient(params.user(t.user), params.item(t.item), t.score_index, x, hyper, ws);
        grad.user(t.user) += ws.grad_user;
        grad.item(t.item) += ws.grad_item;
    }
    return grad;
}

/// One pass over the training pairs in a freshly shuffled order. All planes
/// of a pair are updated from a snapshot taken before that pair's step.
template <typename Scalar>
void bemf_sgd_epoch(BemfParams<Scalar>& params, const RatingsMatrix& train, const BemfHyper& hyper,
                    std::mt19937_64& rng, int epoch = 0) {
    if (params.num_users() < train.num_users() || params.num_items() < train.num_items() ||
        params.num_scores() != train.scale().size()) {
        throw ConfigError("bemf: parameter shapes do not match the training data");
    }
    const auto entries = train.entries();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    const Vec<Scalar> x = train.scale().values().template cast<Scalar>();
    const auto eta = static_cast<Scalar>(hyper.learning_rate);
    PairWorkspace<Scalar> ws(params.num_scores(), params.num_factors());
    for (std::size_t step = 0; step < order.size(); ++step) {
        const auto& t = entries[order[step]];
        auto P = params.user(t.user);
        auto Q = params.item(t.item);
        ws.user_snapshot = P;
        ws.item_snapshot = Q;
        bemf_pair_gradient(ws.user_snapshot, ws.item_snapshot, t.score_index, x, hyper, ws);
        P -= eta * ws.grad_user;
        Q -= eta * ws.grad_item;
        if (!P.allFinite() || !Q.allFinite()) {
            throw DivergenceError(fmt::format("bemf: diverged in epoch {} at pair (user {}, item {})", epoch,
                                              train.raw_user(t.user), train.raw_item(t.item)));
        }
    }
}

struct TrainReport {
    std::vector<double> epoch_cost;
    double final_cost = 0;
    double wall_seconds = 0;
};

template <typename Scalar = double>
struct BemfFit {
    BemfParams<Scalar> params;
    TrainReport report;
};

/// Initialize from hyper.seed, then run hyper.epochs SGD passes. The optional
/// callback sees (epoch, cost) after each pass.
template <typename Scalar = double>
BemfFit<Scalar> bemf_train(const RatingsMatrix& train, const BemfHyper& hyper,
                           const std::function<void(int, double)>& on_epoch = {}) {
    hyper.validate();
    if (train.empty()) throw ConfigError("bemf: empty training set");
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(hyper.seed);
    BemfFit<Scalar> fit{bemf_init<Scalar>(train.num_users(), train.num_items(), train.scale(), hyper, rng), {}};
    fit.report.epoch_cost.reserve(static_cast<std::size_t>(hyper.epochs));
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        bemf_sgd_epoch(fit.params, train, hyper, rng, epoch);
        double cost = 0;
        try {
            cost = static_cast<double>(bemf_cost(fit.params, train, hyper));
        } catch (const DivergenceError&) {
            throw DivergenceError(fmt::format("bemf: non-finite cost after epoch {}", epoch));
        }
        fit.report.epoch_cost.push_back(cost);
        if (on_epoch) on_epoch(epoch, cost);
    }
    fit.report.final_cost = fit.report.epoch_cost.back();
    fit.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return fit;
}

/// Trained BeMF bound to its score scale; the evaluator's view of the model.
struct BemfModel {
    BemfParams<double> params;
    ScoreScale scale;

    Index num_users() const { return params.num_users(); }
    Index num_items() const { return params.num_items(); }
    RatingDistribution<double> distribution(Index u, Index i) const {
        return predict_distribution(params, scale, u, i);
    }
    Prediction predict(Index u, Index i) const { return mode_and_reliability(distribution(u, i)); }
};

/// Mean variance of the predicted distributions over the pairs of `data`.
inline double mean_predicted_variance(const BemfModel& model, const RatingsMatrix& data) {
    if (data.empty()) return 0.0;
    double sum = 0;
    for (const auto& t : data.entries()) sum += variance(model.distribution(t.user, t.item));
    return sum / static_cast<double>(data.size());
}

}  // namespace reckless
