#pragma once

// Experiment commands behind the CLI. Each command validates its whole
// configuration before writing anything to the output directory.
//
// Output directory layout:
//   ingest    train.csv, test.csv, stats.json
//   train     model.ckpt, train_report.csv, train.log
//   evaluate  curve.csv, aggregate.json, thresholds.csv
//   tune      ledger_<arm>.jsonl, front_<arm>.csv, population_<arm>.csv
//   pareto    hypervolume.csv, pareto_points.csv

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reckless/config.hpp"
#include "reckless/evaluation.hpp"
#include "reckless/moo.hpp"
#include "reckless/tuning.hpp"

namespace reckless {

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output;
    bool no_recklessness = false;
    std::optional<std::vector<double>> thresholds;
    std::optional<std::filesystem::path> checkpoint;
};

/// Load the config file and apply command-line overrides.
RunConfig resolve_config(const CommandOptions& options);

struct DatasetStats {
    std::string name;
    Index users = 0;
    Index items = 0;
    Index ratings = 0;
    Index train_ratings = 0;
    Index test_ratings = 0;
};

std::string stats_json(const DatasetStats& stats);

/// Parse the raw dataset, split it, and write canonical train/test files.
DatasetStats cmd_ingest(const RunConfig& config);

/// Canonical train/test split previously written by cmd_ingest.
DataSplit load_canonical_split(const RunConfig& config);

/// Train the configured model on the canonical training split. Returns the
/// per-epoch training cost.
std::vector<double> cmd_train(const RunConfig& config);

Evaluation cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint);

std::string arm_name(bool recklessness);

struct TuneResult {
    std::string arm;
    std::vector<EvaluatedIndividual<Genome>> population;
    std::vector<EvaluatedIndividual<Genome>> front;
};

TuneResult cmd_tune(const RunConfig& config, bool no_recklessness);

struct HypervolumeRow {
    std::string arm;
    double theta = 0;
    double hypervolume = 0;
    std::size_t points = 0;
};

/// Hypervolume (reference (0,0)) for every (arm, theta) cell. `points[a][t]`
/// holds arm a's objective points after filtering at thresholds[t].
std::vector<HypervolumeRow> hypervolume_table(const std::vector<std::string>& arms,
                                              const std::vector<double>& thresholds,
                                              const std::vector<std::vector<std::vector<ObjectivePoint>>>& points);

std::string hypervolume_csv(std::span<const HypervolumeRow> rows);

/// Retrain each front individual on the full training split and score it on
/// the test split once per threshold; predictions below the threshold are
/// discarded before the aggregates are computed.
std::vector<std::vector<ObjectivePoint>> test_points_by_threshold(std::span<const EvaluatedIndividual<Genome>> front,
                                                                  const DataSplit& split, const RunConfig& config,
                                                                  const std::vector<double>& thresholds);

std::vector<HypervolumeRow> cmd_pareto(const RunConfig& config, const std::vector<double>& thresholds);

}  // namespace reckless
