#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "reckless/commands.hpp"
#include "reckless/errors.hpp"

using namespace reckless;

namespace {

int report(const char* kind, const std::exception& e, int code) {
    fmt::print(stderr, "reckless: {}: {}\n", kind, e.what());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recklessness-regularized Bernoulli matrix factorization experiments"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::uint64_t seed = 0;
    std::string output;
    std::vector<double> thresholds;
    std::string checkpoint;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config, "JSON config file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "override every random seed");
        cmd->add_option("--output", output, "override the output directory");
    };

    auto* ingest = app.add_subcommand("ingest", "parse and split the raw dataset");
    auto* train = app.add_subcommand("train", "train the configured model");
    auto* evaluate = app.add_subcommand("evaluate", "threshold curve and aggregate metrics for a checkpoint");
    auto* tune = app.add_subcommand("tune", "NSGA-II hyperparameter search");
    auto* pareto = app.add_subcommand("pareto", "test-set hypervolume of tuned fronts");
    for (auto* cmd : {ingest, train, evaluate, tune, pareto}) common(cmd);
    evaluate->add_option("--checkpoint", checkpoint, "model checkpoint (default <output>/model.ckpt)");
    tune->add_flag("--no-recklessness", opts.no_recklessness, "pin the recklessness gene to zero");
    pareto->add_option("--thresholds", thresholds, "reliability thresholds")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.get_subcommand()->count("--seed") > 0) opts.seed = seed;
        if (!output.empty()) opts.output = output;
        if (!thresholds.empty()) opts.thresholds = thresholds;
        const RunConfig config = resolve_config(opts);

        if (*ingest) {
            const auto s = cmd_ingest(config);
            fmt::print("{}: {} users, {} items, {} train / {} test ratings\n", s.name, s.users, s.items,
                       s.train_ratings, s.test_ratings);
        } else if (*train) {
            const auto costs = cmd_train(config);
            fmt::print("trained {} epochs, final cost {}\n", costs.size(), costs.empty() ? 0.0 : costs.back());
        } else if (*evaluate) {
            const auto path = checkpoint.empty() ? config.output_dir / "model.ckpt" : std::filesystem::path(checkpoint);
            const auto e = cmd_evaluate(config, path);
            fmt::print("1-MAE {:.4f}  coverage {:.4f}\n", e.score.one_minus_mae, e.score.coverage);
        } else if (*tune) {
            const auto r = cmd_tune(config, opts.no_recklessness);
            fmt::print("{}: front of {} individuals\n", r.arm, r.front.size());
        } else if (*pareto) {
            for (const auto& row : cmd_pareto(config, config.pareto.thresholds)) {
                fmt::print("{:<16} theta={:<4} hypervolume={:.4f}\n", row.arm, row.theta, row.hypervolume);
            }
        }
    } catch (const ConfigError& e) {
        return report("config error", e, 1);
    } catch (const DivergenceError& e) {
        return report("diverged", e, 3);
    } catch (const DataError& e) {
        return report("data error", e, 2);
    }
    return 0;
}
