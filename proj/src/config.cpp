#include "reckless/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "reckless/errors.hpp"

namespace reckless {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(fmt::format("config: '{}' must be an object", where));
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError(fmt::format("config: unknown key '{}' in '{}'", key, where));
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("config: bad value for '{}'", key));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

Column column_from_string(const std::string& s) {
    if (s == "user") return Column::user;
    if (s == "item") return Column::item;
    if (s == "score" || s == "rating") return Column::score;
    if (s == "ignore" || s == "timestamp") return Column::ignore;
    throw ConfigError(fmt::format("config: unknown column role '{}'", s));
}

ScoreScale scale_from_json(const json& j) {
    if (j.is_array()) return ScoreScale(j.get<std::vector<double>>());
    check_keys(j, "scale", {"min", "max", "step"});
    return ScoreScale::range(j.at("min").get<double>(), j.at("max").get<double>(), j.value("step", 1.0));
}

template <typename T>
GeneRange<T> range_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(fmt::format("config: range '{}' must be [lo, hi]", name));
    return {j[0].get<T>(), j[1].get<T>()};
}

}  // namespace

std::string to_string(GradientMode mode) { return mode == GradientMode::paper ? "paper" : "exact"; }

GradientMode gradient_mode_from_string(const std::string& s) {
    if (s == "paper") return GradientMode::paper;
    if (s == "exact") return GradientMode::exact;
    throw ConfigError(fmt::format("config: unknown gradient mode '{}'", s));
}

nlohmann::ordered_json to_json(const BemfHyper& h) {
    nlohmann::ordered_json j;
    j["factors"] = h.factors;
    j["learning_rate"] = h.learning_rate;
    j["l2"] = h.l2;
    j["recklessness"] = h.recklessness;
    j["epochs"] = h.epochs;
    j["init_stddev"] = h.init_stddev;
    j["seed"] = h.seed;
    j["gradient_mode"] = to_string(h.gradient_mode);
    return j;
}

nlohmann::ordered_json to_json(const PmfHyper& h) {
    nlohmann::ordered_json j;
    j["factors"] = h.factors;
    j["learning_rate"] = h.learning_rate;
    j["l2"] = h.l2;
    j["epochs"] = h.epochs;
    j["seed"] = h.seed;
    j["init_stddev"] = h.init_stddev;
    return j;
}

nlohmann::ordered_json to_json(const GaConfig& c) {
    nlohmann::ordered_json j;
    j["population"] = c.population_size;
    j["generations"] = c.generations;
    j["tournament_size"] = c.tournament_size;
    j["mutation_probability"] = c.mutation_probability;
    j["crossover_probability"] = c.crossover_probability;
    j["seed"] = c.seed;
    j["cv_folds"] = c.cv_folds;
    j["threads"] = c.threads;
    return j;
}

BemfHyper bemf_hyper_from_json(const json& j, BemfHyper h) {
    check_keys(j, "bemf", {"factors", "learning_rate", "l2", "recklessness", "epochs", "init_stddev", "seed",
                           "gradient_mode"});
    read(j, "factors", h.factors);
    read(j, "learning_rate", h.learning_rate);
    read(j, "l2", h.l2);
    read(j, "recklessness", h.recklessness);
    read(j, "epochs", h.epochs);
    read(j, "init_stddev", h.init_stddev);
    read(j, "seed", h.seed);
    if (j.contains("gradient_mode")) h.gradient_mode = gradient_mode_from_string(j.at("gradient_mode").get<std::string>());
    return h;
}

PmfHyper pmf_hyper_from_json(const json& j, PmfHyper h) {
    check_keys(j, "pmf", {"factors", "learning_rate", "l2", "epochs", "seed", "init_stddev"});
    read(j, "factors", h.factors);
    read(j, "learning_rate", h.learning_rate);
    read(j, "l2", h.l2);
    read(j, "epochs", h.epochs);
    read(j, "seed", h.seed);
    read(j, "init_stddev", h.init_stddev);
    return h;
}

DatasetSpec dataset_preset(const std::string& name) {
    DatasetSpec d;
    d.name = name;
    if (name == "filmtrust") {
        d.format = {" ", {Column::user, Column::item, Column::score}, false};
        d.scale = ScoreScale::range(0.5, 4.0, 0.5);
        d.test_fraction = 2819.0 / (32675.0 + 2819.0);
    } else if (name == "ml100k") {
        d.format = {"\t", {Column::user, Column::item, Column::score, Column::ignore}, false};
        d.scale = ScoreScale::range(1.0, 5.0, 1.0);
        d.test_fraction = 7974.0 / (92026.0 + 7974.0);
    } else if (name == "ml1m") {
        d.format = {"::", {Column::user, Column::item, Column::score, Column::ignore}, false};
        d.scale = ScoreScale::range(1.0, 5.0, 1.0);
        d.test_fraction = 89178.0 / (911031.0 + 89178.0);
    } else if (name == "canonical") {
        d.format = canonical_format();
    } else {
        throw ConfigError(fmt::format("config: unknown dataset preset '{}'", name));
    }
    return d;
}

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    model.bemf.seed = s;
    model.pmf.seed = s;
    tune.ga.seed = s;
}

void RunConfig::validate() const {
    if (dataset.scale.size() < 2) throw ConfigError("config: dataset scale missing");
    if (!(dataset.test_fraction > 0 && dataset.test_fraction < 1)) throw ConfigError("config: test_fraction must lie in (0,1)");
    model.bemf.validate();
    model.pmf.validate();
    if (evaluation.n_points < 2) throw ConfigError("config: evaluation n_points must be >= 2");
    for (double t : evaluation.report_thresholds) {
        if (!(t >= 0 && t <= 1)) throw ConfigError("config: report thresholds must lie in [0,1]");
    }
    tune.ga.validate();
    tune.ranges.validate();
    for (double t : pareto.thresholds) {
        if (!(t >= 0 && t <= 1)) throw ConfigError("config: pareto thresholds must lie in [0,1]");
    }
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, "root", {"seed", "output", "dataset", "model", "evaluation", "tune", "pareto"});
    RunConfig c;
    if (!j.contains("dataset")) throw ConfigError("config: 'dataset' section is required");

    const auto& d = j.at("dataset");
    check_keys(d, "dataset", {"preset", "name", "path", "test_path", "delimiter", "columns", "skip_header", "scale",
                              "test_fraction"});
    if (d.contains("preset")) c.dataset = dataset_preset(d.at("preset").get<std::string>());
    read(d, "name", c.dataset.name);
    if (!d.contains("path")) throw ConfigError("config: dataset.path is required");
    c.dataset.path = resolve(base_dir, d.at("path").get<std::string>());
    if (d.contains("test_path")) c.dataset.test_path = resolve(base_dir, d.at("test_path").get<std::string>());
    read(d, "delimiter", c.dataset.format.delimiter);
    read(d, "skip_header", c.dataset.format.skip_header);
    if (d.contains("columns")) {
        c.dataset.format.columns.clear();
        for (const auto& col : d.at("columns")) c.dataset.format.columns.push_back(column_from_string(col.get<std::string>()));
    }
    if (d.contains("scale")) c.dataset.scale = scale_from_json(d.at("scale"));
    read(d, "test_fraction", c.dataset.test_fraction);
    if (c.dataset.name.empty()) c.dataset.name = c.dataset.path.stem().string();
    if (!std::filesystem::exists(c.dataset.path)) {
        throw ConfigError(fmt::format("config: dataset file {} does not exist", c.dataset.path.string()));
    }
    if (c.dataset.test_path && !std::filesystem::exists(*c.dataset.test_path)) {
        throw ConfigError(fmt::format("config: dataset test file {} does not exist", c.dataset.test_path->string()));
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, "model", {"kind", "bemf", "pmf"});
        const auto kind = m.value("kind", std::string("bemf"));
        if (kind == "bemf") {
            c.model.kind = ModelKind::bemf;
        } else if (kind == "pmf") {
            c.model.kind = ModelKind::pmf;
        } else {
            throw ConfigError(fmt::format("config: unknown model kind '{}'", kind));
        }
        if (m.contains("bemf")) c.model.bemf = bemf_hyper_from_json(m.at("bemf"), c.model.bemf);
        if (m.contains("pmf")) c.model.pmf = pmf_hyper_from_json(m.at("pmf"), c.model.pmf);
    }

    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        check_keys(e, "evaluation", {"n_points", "report_thresholds"});
        read(e, "n_points", c.evaluation.n_points);
        read(e, "report_thresholds", c.evaluation.report_thresholds);
    }

    if (j.contains("tune")) {
        const auto& t = j.at("tune");
        check_keys(t, "tune", {"population", "generations", "tournament_size", "mutation_probability",
                               "crossover_probability", "cv_folds", "threads", "recklessness", "ranges"});
        read(t, "population", c.tune.ga.population_size);
        read(t, "generations", c.tune.ga.generations);
        read(t, "tournament_size", c.tune.ga.tournament_size);
        read(t, "mutation_probability", c.tune.ga.mutation_probability);
        read(t, "crossover_probability", c.tune.ga.crossover_probability);
        read(t, "cv_folds", c.tune.ga.cv_folds);
        read(t, "threads", c.tune.ga.threads);
        read(t, "recklessness", c.tune.recklessness);
        if (t.contains("ranges")) {
            const auto& r = t.at("ranges");
            check_keys(r, "tune.ranges", {"factors", "learning_rate", "l2", "recklessness", "epochs"});
            if (r.contains("factors")) c.tune.ranges.factors = range_from_json<int>(r.at("factors"), "factors");
            if (r.contains("learning_rate")) c.tune.ranges.learning_rate = range_from_json<double>(r.at("learning_rate"), "learning_rate");
            if (r.contains("l2")) c.tune.ranges.l2 = range_from_json<double>(r.at("l2"), "l2");
            if (r.contains("recklessness")) c.tune.ranges.recklessness = range_from_json<double>(r.at("recklessness"), "recklessness");
            if (r.contains("epochs")) c.tune.ranges.epochs = range_from_json<int>(r.at("epochs"), "epochs");
        }
    }

    if (j.contains("pareto")) {
        const auto& p = j.at("pareto");
        check_keys(p, "pareto", {"fronts", "thresholds", "include_pmf"});
        if (p.contains("fronts")) {
            for (const auto& f : p.at("fronts")) {
                check_keys(f, "pareto.fronts[]", {"arm", "path"});
                c.pareto.fronts.push_back({f.at("arm").get<std::string>(), resolve(base_dir, f.at("path").get<std::string>())});
            }
        }
        read(p, "thresholds", c.pareto.thresholds);
        read(p, "include_pmf", c.pareto.include_pmf);
    }

    if (j.contains("output")) c.output_dir = resolve(base_dir, j.at("output").get<std::string>());
    else c.output_dir = base_dir / "out";
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed);
        c.apply_seed(seed);
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("config: cannot open {}", path.string()));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {} is not valid JSON: {}", path.string(), e.what()));
    }
    try {
        return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
}

}  // namespace reckless
