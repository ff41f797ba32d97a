#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reckless/bemf.hpp"
#include "reckless/dataset.hpp"
#include "reckless/nsga2.hpp"
#include "reckless/pmf.hpp"
#include "reckless/tuning.hpp"

namespace reckless {

struct DatasetSpec {
    std::string name;
    std::filesystem::path path;                     // raw ratings (ingest input)
    std::optional<std::filesystem::path> test_path; // pre-split test file; otherwise random split
    DelimitedFormat format;
    ScoreScale scale;
    double test_fraction = 0.1;
};

enum class ModelKind { bemf, pmf };

struct ModelSpec {
    ModelKind kind = ModelKind::bemf;
    BemfHyper bemf;
    PmfHyper pmf;
};

struct EvaluationSpec {
    int n_points = 20;
    std::vector<double> report_thresholds{0.3, 0.5, 0.7};
};

struct TuneSpec {
    GaConfig ga;
    GenomeRanges ranges;
    bool recklessness = true;
};

struct FrontSpec {
    std::string arm;
    std::filesystem::path path;
};

struct ParetoSpec {
    std::vector<FrontSpec> fronts;  // empty: the tune outputs found in the output directory
    std::vector<double> thresholds{0.0, 0.3, 0.5, 0.7};
    bool include_pmf = false;
};

struct RunConfig {
    DatasetSpec dataset;
    ModelSpec model;
    EvaluationSpec evaluation;
    TuneSpec tune;
    ParetoSpec pareto;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    /// Propagate the global seed into every seeded component.
    void apply_seed(std::uint64_t s);
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Delimiter, column order and scale for the bundled dataset layouts:
/// "filmtrust", "ml100k", "ml1m", "canonical".
DatasetSpec dataset_preset(const std::string& name);

nlohmann::ordered_json to_json(const BemfHyper& h);
nlohmann::ordered_json to_json(const PmfHyper& h);
nlohmann::ordered_json to_json(const GaConfig& c);
BemfHyper bemf_hyper_from_json(const nlohmann::json& j, BemfHyper base = {});
PmfHyper pmf_hyper_from_json(const nlohmann::json& j, PmfHyper base = {});

std::string to_string(GradientMode mode);
GradientMode gradient_mode_from_string(const std::string& s);

}  // namespace reckless
