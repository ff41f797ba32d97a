#pragma once

#include <concepts>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "reckless/dataset.hpp"
#include "reckless/errors.hpp"
#include "reckless/probcore.hpp"

namespace reckless {

template <typename M>
concept Predictor = requires(const M& m, Index u, Index i) {
    { m.predict(u, i) } -> std::convertible_to<Prediction>;
    { m.num_users() } -> std::convertible_to<Index>;
    { m.num_items() } -> std::convertible_to<Index>;
};

struct PredictionRecord {
    Index user = 0;
    Index item = 0;
    double true_score = 0;
    double predicted_score = 0;
    double reliability = 0;
};

/// One record per test rating, in (user, item) order.
template <Predictor M>
std::vector<PredictionRecord> predict_testset(const M& model, const RatingsMatrix& test) {
    std::vector<PredictionRecord> records;
    records.reserve(static_cast<std::size_t>(test.size()));
    for (const auto& t : test.entries()) {
        if (t.user >= model.num_users() || t.item >= model.num_items()) {
            throw DataError(fmt::format("model has no factors for test pair (user {}, item {})", test.raw_user(t.user),
                                        test.raw_item(t.item)));
        }
        const Prediction p = model.predict(t.user, t.item);
        records.push_back({t.user, t.item, test.score(t), p.score, p.reliability});
    }
    return records;
}

struct ThresholdMetrics {
    std::optional<double> mae;  // empty when no prediction reaches the threshold
    double coverage = 0;
};

/// Normalized MAE and coverage over the records with reliability >= theta.
ThresholdMetrics thresholded_metrics(std::span<const PredictionRecord> records, double theta,
                                     const ScoreScale& scale);

/// theta_k = k / (N - 1), k = 0..N-1.
std::vector<double> threshold_grid(int n_points);

struct CurveRow {
    double theta = 0;
    std::optional<double> mae;
    double coverage = 0;
};

struct ThresholdCurve {
    std::vector<CurveRow> rows;

    int n_points() const { return static_cast<int>(rows.size()); }
};

/// Metrics at every grid threshold. With min_reliability > 0, predictions
/// below it are discarded first (coverage stays relative to all records).
ThresholdCurve threshold_curve(std::span<const PredictionRecord> records, int n_points, const ScoreScale& scale,
                               double min_reliability = 0.0);

/// w_k = 2 (N - k) / ((N + 1) N), k = 0..N-1.
std::vector<double> aggregate_weights(int n_points);

struct AggregateScore {
    double one_minus_mae = 0;
    double coverage = 0;
};

/// Weighted means of (1 - MAE) and coverage over the curve rows. A row whose
/// MAE is undefined contributes 0 to the (1 - MAE) sum.
AggregateScore aggregate(const ThresholdCurve& curve);

struct Evaluation {
    ThresholdCurve curve;
    AggregateScore score;
};

template <Predictor M>
Evaluation evaluate(const M& model, const RatingsMatrix& test, int n_points, double min_reliability = 0.0) {
    const auto records = predict_testset(model, test);
    auto curve = threshold_curve(records, n_points, test.scale(), min_reliability);
    const auto score = aggregate(curve);
    return {std::move(curve), score};
}

/// "theta,mae,coverage" with an empty mae field for undefined rows.
std::string curve_csv(const ThresholdCurve& curve);
void write_curve_csv(const ThresholdCurve& curve, const std::filesystem::path& path);

/// {"one_minus_mae": ..., "coverage": ...}
std::string aggregate_json(const AggregateScore& score);
void write_aggregate_json(const AggregateScore& score, const std::filesystem::path& path);

}  // namespace reckless
