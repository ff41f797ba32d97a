#include <doctest.h>

#include <json.hpp>

#include "reckless/config.hpp"

using namespace reckless;
using nlohmann::json;

namespace {

const std::filesystem::path kData = RECKLESS_TEST_DATA;

json minimal() { return json::parse(R"({"dataset": {"preset": "ml100k", "path": "tiny_ratings.tsv"}})"); }

}  // namespace

TEST_CASE("defaults") {
    const auto c = parse_config(minimal(), kData);
    CHECK(c.dataset.path == kData / "tiny_ratings.tsv");
    CHECK(c.dataset.name == "ml100k");
    CHECK(c.dataset.scale == ScoreScale::range(1, 5, 1));
    CHECK(c.dataset.format.delimiter == "\t");
    CHECK(c.evaluation.n_points == 20);
    CHECK(c.pareto.thresholds == std::vector<double>{0.0, 0.3, 0.5, 0.7});
    CHECK(c.evaluation.report_thresholds == std::vector<double>{0.3, 0.5, 0.7});
    CHECK(c.model.kind == ModelKind::bemf);
    CHECK(c.model.bemf.gradient_mode == GradientMode::paper);
    CHECK(c.output_dir == kData / "out");
}

TEST_CASE("presets") {
    const auto ft = dataset_preset("filmtrust");
    CHECK(ft.scale.size() == 8);
    CHECK(ft.scale.span() == 3.5);
    CHECK(ft.format.delimiter == " ");
    CHECK(dataset_preset("ml100k").scale.span() == 4.0);
    CHECK(dataset_preset("ml1m").format.delimiter == "::");
    CHECK_THROWS_AS(dataset_preset("netflix"), ConfigError);
}

TEST_CASE("full config with paper-scale GA") {
    auto j = minimal();
    j["seed"] = 5;
    j["model"] = json::parse(R"({"kind": "pmf", "pmf": {"factors": 6, "l2": 0.1}, "bemf": {"gradient_mode": "exact"}})");
    j["tune"] = json::parse(R"({"population": 100, "generations": 150, "ranges": {"recklessness": [-1, 1]}})");
    j["dataset"]["scale"] = json::parse(R"({"min": 1, "max": 5})");
    const auto c = parse_config(j, kData);
    CHECK(c.model.kind == ModelKind::pmf);
    CHECK(c.model.pmf.factors == 6);
    CHECK(c.model.pmf.seed == 5);
    CHECK(c.model.bemf.seed == 5);
    CHECK(c.tune.ga.seed == 5);
    CHECK(c.model.bemf.gradient_mode == GradientMode::exact);
    CHECK(c.tune.ga.population_size == 100);
    CHECK(c.tune.ga.generations == 150);
    CHECK(c.tune.ranges.recklessness == GeneRange<double>{-1, 1});
}

TEST_CASE("invalid configs") {
    auto bad = [](const std::string& patch) {
        auto j = minimal();
        j.merge_patch(json::parse(patch));
        return j;
    };
    CHECK_THROWS_AS(parse_config(bad(R"({"bogus": 1})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"model": {"bemf": {"learning_rate": 0}}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"model": {"bemf": {"factorz": 2}}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"model": {"kind": "mlp"}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"dataset": {"path": "nope.tsv"}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"evaluation": {"n_points": 1}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"tune": {"mutation_probability": 2}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"pareto": {"thresholds": [1.5]}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(bad(R"({"dataset": {"scale": [3, 2]}})"), kData), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse("{}"), kData), ConfigError);
    CHECK_THROWS_AS(load_config(kData / "missing.json"), ConfigError);
    CHECK_THROWS_AS(load_config(kData / "tiny_ratings.tsv"), ConfigError);
}

TEST_CASE("hyperparameter json round trip") {
    BemfHyper h;
    h.recklessness = 0.7;
    h.gradient_mode = GradientMode::exact;
    h.seed = 1ULL << 63;
    const auto back = bemf_hyper_from_json(json::parse(to_json(h).dump()));
    CHECK(back.recklessness == 0.7);
    CHECK(back.gradient_mode == GradientMode::exact);
    CHECK(back.seed == h.seed);
    PmfHyper p;
    p.l2 = 0.25;
    CHECK(pmf_hyper_from_json(json::parse(to_json(p).dump())).l2 == 0.25);
}
