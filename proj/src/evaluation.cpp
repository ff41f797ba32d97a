#include "reckless/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace reckless {

ThresholdMetrics thresholded_metrics(std::span<const PredictionRecord> records, double theta,
                                     const ScoreScale& scale) {
    if (records.empty()) throw DataError("thresholded metrics over an empty prediction set");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError(fmt::format("threshold {} outside [0,1]", theta));
    const double range = scale.span();
    std::size_t kept = 0;
    double abs_err = 0;
    for (const auto& r : records) {
        if (r.reliability >= theta) {
            ++kept;
            abs_err += std::abs(r.true_score - r.predicted_score) / range;
        }
    }
    ThresholdMetrics m;
    m.coverage = static_cast<double>(kept) / static_cast<double>(records.size());
    if (kept > 0) m.mae = abs_err / static_cast<double>(kept);
    return m;
}

std::vector<double> threshold_grid(int n_points) {
    if (n_points < 2) throw ConfigError("threshold grid needs N >= 2");
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) grid[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n_points - 1);
    return grid;
}

ThresholdCurve threshold_curve(std::span<const PredictionRecord> records, int n_points, const ScoreScale& scale,
                               double min_reliability) {
    ThresholdCurve curve;
    for (double theta : threshold_grid(n_points)) {
        const auto m = thresholded_metrics(records, std::max(theta, min_reliability), scale);
        curve.rows.push_back({theta, m.mae, m.coverage});
    }
    return curve;
}

std::vector<double> aggregate_weights(int n_points) {
    if (n_points < 2) throw ConfigError("aggregate weights need N >= 2");
    const double norm = 2.0 / (static_cast<double>(n_points + 1) * n_points);
    std::vector<double> w(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) w[static_cast<std::size_t>(k)] = norm * (n_points - k);
    return w;
}

AggregateScore aggregate(const ThresholdCurve& curve) {
    // Integer weights N - k, normalized once by their sum N (N + 1) / 2.
    const int n = curve.n_points();
    if (n < 2) throw ConfigError("aggregate needs a curve with N >= 2");
    const double total = static_cast<double>(n) * (n + 1) / 2.0;
    double quality = 0, coverage = 0;
    for (int k = 0; k < n; ++k) {
        const auto& row = curve.rows[static_cast<std::size_t>(k)];
        if (row.mae) quality += (n - k) * (1.0 - *row.mae);
        coverage += (n - k) * row.coverage;
    }
    return {quality / total, coverage / total};
}

std::string curve_csv(const ThresholdCurve& curve) {
    std::string out = "theta,mae,coverage\n";
    for (const auto& row : curve.rows) {
        out += row.mae ? fmt::format("{},{},{}\n", row.theta, *row.mae, row.coverage)
                       : fmt::format("{},,{}\n", row.theta, row.coverage);
    }
    return out;
}

namespace {
void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
}
}  // namespace

void write_curve_csv(const ThresholdCurve& curve, const std::filesystem::path& path) {
    write_text(path, curve_csv(curve));
}

std::string aggregate_json(const AggregateScore& score) {
    nlohmann::ordered_json j;
    j["one_minus_mae"] = score.one_minus_mae;
    j["coverage"] = score.coverage;
    return j.dump(2) + "\n";
}

void write_aggregate_json(const AggregateScore& score, const std::filesystem::path& path) {
    write_text(path, aggregate_json(score));
}

}  // namespace reckless
