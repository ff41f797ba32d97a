#include "reckless/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>

#include <fmt/format.h>
#include <json.hpp>

#include "reckless/bemf.hpp"
#include "reckless/checkpoint.hpp"
#include "reckless/pmf.hpp"

namespace reckless {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string format_double(double v) {
    return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : fmt::format("{}", v);
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
    RunConfig config = load_config(options.config);
    if (options.seed) config.apply_seed(*options.seed);
    if (options.output) config.output_dir = *options.output;
    if (options.thresholds) config.pareto.thresholds = *options.thresholds;
    config.validate();
    return config;
}

std::string stats_json(const DatasetStats& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["users"] = s.users;
    j["items"] = s.items;
    j["ratings"] = s.ratings;
    j["train_ratings"] = s.train_ratings;
    j["test_ratings"] = s.test_ratings;
    return j.dump(2) + "\n";
}

DatasetStats cmd_ingest(const RunConfig& config) {
    const auto& d = config.dataset;
    DataSplit split;
    if (d.test_path) {
        split = load_split(d.path, *d.test_path, d.format, d.scale);
    } else {
        split = random_split(load_delimited(d.path, d.format, d.scale), d.test_fraction, config.seed);
    }
    DatasetStats stats{d.name,
                       split.train.num_users(),
                       split.train.num_items(),
                       split.train.size() + split.test.size(),
                       split.train.size(),
                       split.test.size()};
    ensure_dir(config.output_dir);
    write_canonical(split.train, config.output_dir / "train.csv");
    write_canonical(split.test, config.output_dir / "test.csv");
    write_file(config.output_dir / "stats.json", stats_json(stats));
    return stats;
}

DataSplit load_canonical_split(const RunConfig& config) {
    const auto train = config.output_dir / "train.csv";
    const auto test = config.output_dir / "test.csv";
    for (const auto& p : {train, test}) {
        if (!fs::exists(p)) throw DataError(fmt::format("canonical dataset file {} missing; run ingest first", p.string()));
    }
    return load_split(train, test, canonical_format(), config.dataset.scale);
}

std::vector<double> cmd_train(const RunConfig& config) {
    config.validate();
    const auto split = load_canonical_split(config);
    ensure_dir(config.output_dir);
    std::ofstream report(config.output_dir / "train_report.csv", std::ios::binary | std::ios::trunc);
    report << "epoch,cost\n";
    std::ofstream log(config.output_dir / "train.log", std::ios::app);
    log << fmt::format("[{}] train {} on {} ({} ratings)\n", timestamp(),
                       config.model.kind == ModelKind::bemf ? "bemf" : "pmf", config.dataset.name, split.train.size());

    const auto start = std::chrono::steady_clock::now();
    std::vector<double> costs;
    auto on_epoch = [&](int epoch, double cost) {
        costs.push_back(cost);
        report << fmt::format("{},{}\n", epoch, cost);
        report.flush();
    };
    Checkpoint checkpoint;
    try {
        if (config.model.kind == ModelKind::bemf) {
            auto fit = bemf_train(split.train, config.model.bemf, on_epoch);
            checkpoint = BemfCheckpoint{{std::move(fit.params), split.train.scale()}, config.model.bemf};
        } else {
            auto fit = pmf_train(split.train, config.model.pmf);
            for (std::size_t e = 0; e < fit.epoch_squared_error.size(); ++e) {
                on_epoch(static_cast<int>(e), fit.epoch_squared_error[e]);
            }
            checkpoint = PmfCheckpoint{{std::move(fit.params), split.train.scale()}, config.model.pmf};
        }
    } catch (const DivergenceError& e) {
        log << fmt::format("[{}] diverged: {}\n", timestamp(), e.what());
        throw;
    }
    save_checkpoint(checkpoint, config.output_dir / "model.ckpt");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << fmt::format("[{}] done: final cost {} in {:.2f}s\n", timestamp(), costs.empty() ? 0.0 : costs.back(),
                       seconds);
    return costs;
}

Evaluation cmd_evaluate(const RunConfig& config, const fs::path& checkpoint_path) {
    config.validate();
    const auto split = load_canonical_split(config);
    const auto checkpoint = load_checkpoint(checkpoint_path);
    auto check_dims = [&](Index users, Index items, const ScoreScale& scale) {
        if (users != split.test.num_users() || items != split.test.num_items() || !(scale == split.test.scale())) {
            throw DataError(fmt::format("checkpoint is {}x{} with {} scores but the dataset is {}x{} with {} scores",
                                        users, items, scale.size(), split.test.num_users(), split.test.num_items(),
                                        split.test.scale().size()));
        }
    };
    const int n = config.evaluation.n_points;
    Evaluation eval;
    std::vector<PredictionRecord> records;
    std::visit(
        [&](const auto& c) {
            check_dims(c.model.num_users(), c.model.num_items(), c.model.scale);
            records = predict_testset(c.model, split.test);
        },
        checkpoint);
    eval.curve = threshold_curve(records, n, split.test.scale());
    eval.score = aggregate(eval.curve);

    ensure_dir(config.output_dir);
    write_curve_csv(eval.curve, config.output_dir / "curve.csv");
    write_aggregate_json(eval.score, config.output_dir / "aggregate.json");
    std::string rows = "theta,mae,coverage\n";
    for (double theta : config.evaluation.report_thresholds) {
        const auto m = thresholded_metrics(records, theta, split.test.scale());
        rows += m.mae ? fmt::format("{},{},{}\n", theta, *m.mae, m.coverage) : fmt::format("{},,{}\n", theta, m.coverage);
    }
    write_file(config.output_dir / "thresholds.csv", rows);
    return eval;
}

std::string arm_name(bool recklessness) { return recklessness ? "reckless" : "no_recklessness"; }

TuneResult cmd_tune(const RunConfig& config, bool no_recklessness) {
    config.validate();
    const bool reckless = config.tune.recklessness && !no_recklessness;
    const BemfGenomeSpace space(config.tune.ranges, reckless);
    const auto split = load_canonical_split(config);
    const auto folds = kfold(split.train, config.tune.ga.cv_folds, config.seed);
    const int n_points = config.evaluation.n_points;

    ensure_dir(config.output_dir);
    const auto arm = arm_name(reckless);
    RunLedger ledger(config.output_dir / fmt::format("ledger_{}.jsonl", arm));

    std::mutex results_mutex;
    std::map<std::pair<int, int>, FitnessResult> results;
    FitnessFn<Genome> fitness = [&](const Genome& g, int generation, int index) {
        auto r = cv_fitness(g, split.train, folds, n_points, config.model.bemf, config.seed);
        std::lock_guard lock(results_mutex);
        results[{generation, index}] = r;
        return r.fitness;
    };
    EvaluationObserver<Genome> observe = [&](int generation, int index, const EvaluatedIndividual<Genome>& ind) {
        FitnessResult r;
        {
            std::lock_guard lock(results_mutex);
            r = results.at({generation, index});
            results.erase({generation, index});
        }
        ledger.append(generation, index, ind.genome, r);
        if (index + 1 == config.tune.ga.population_size) {
            fmt::print(stderr, "[tune:{}] generation {} evaluated\n", arm, generation);
        }
    };
    auto run = nsga2_run(config.tune.ga, space, fitness, observe);

    TuneResult result{arm, std::move(run.population), {}};
    result.front = pareto_front<Genome>(result.population);
    write_front_csv(result.front, config.output_dir / fmt::format("front_{}.csv", arm));

    std::string pop = "one_minus_mae,coverage,rank,crowding,factors,learning_rate,l2,recklessness,epochs\n";
    for (const auto& ind : result.population) {
        const auto& g = ind.genome;
        pop += fmt::format("{},{},{},{},{},{},{},{},{}\n", ind.fitness.one_minus_mae, ind.fitness.coverage, ind.rank,
                           format_double(ind.crowding), g.factors, g.learning_rate, g.l2, g.recklessness, g.epochs);
    }
    write_file(config.output_dir / fmt::format("population_{}.csv", arm), pop);
    return result;
}

std::vector<HypervolumeRow> hypervolume_table(const std::vector<std::string>& arms,
                                              const std::vector<double>& thresholds,
                                              const std::vector<std::vector<std::vector<ObjectivePoint>>>& points) {
    std::vector<HypervolumeRow> rows;
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            const auto& pts = points.at(a).at(t);
            if (pts.empty()) throw DataError(fmt::format("arm '{}' has an empty front", arms[a]));
            rows.push_back({arms[a], thresholds[t], hypervolume_2d(pts), pareto_order(pts).size()});
        }
    }
    return rows;
}

std::string hypervolume_csv(std::span<const HypervolumeRow> rows) {
    std::string out = "arm,theta,hypervolume,front_size\n";
    for (const auto& r : rows) out += fmt::format("{},{},{},{}\n", r.arm, r.theta, r.hypervolume, r.points);
    return out;
}

std::vector<std::vector<ObjectivePoint>> test_points_by_threshold(std::span<const EvaluatedIndividual<Genome>> front,
                                                                  const DataSplit& split, const RunConfig& config,
                                                                  const std::vector<double>& thresholds) {
    std::vector<std::vector<ObjectivePoint>> points(thresholds.size());
    const auto results = parallel_map<std::vector<ObjectivePoint>>(
        front.size(), config.tune.ga.threads, [&](std::size_t j) {
            const auto& g = front[j].genome;
            std::vector<ObjectivePoint> per_theta(thresholds.size(), ObjectivePoint{0.0, 0.0});
            try {
                const auto hyper = to_hyper(g, config.model.bemf, derive_seed(config.seed, genome_hash(g), -1));
                auto fit = bemf_train(split.train, hyper);
                const BemfModel model{std::move(fit.params), split.train.scale()};
                const auto records = predict_testset(model, split.test);
                for (std::size_t t = 0; t < thresholds.size(); ++t) {
                    const auto s = aggregate(threshold_curve(records, config.evaluation.n_points, split.test.scale(),
                                                             thresholds[t]));
                    per_theta[t] = {s.one_minus_mae, s.coverage};
                }
            } catch (const DivergenceError&) {
                // worst point, as during the search
            }
            return per_theta;
        });
    for (const auto& per_theta : results) {
        for (std::size_t t = 0; t < thresholds.size(); ++t) points[t].push_back(per_theta[t]);
    }
    return points;
}

std::vector<HypervolumeRow> cmd_pareto(const RunConfig& config, const std::vector<double>& thresholds) {
    config.validate();
    if (thresholds.empty()) throw ConfigError("pareto: no thresholds given");
    for (double t : thresholds) {
        if (!(t >= 0 && t <= 1)) throw ConfigError(fmt::format("pareto: threshold {} outside [0,1]", t));
    }
    auto fronts = config.pareto.fronts;
    if (fronts.empty()) {
        for (bool reckless : {true, false}) {
            const auto p = config.output_dir / fmt::format("front_{}.csv", arm_name(reckless));
            if (fs::exists(p)) fronts.push_back({arm_name(reckless), p});
        }
    }
    if (fronts.empty() && !config.pareto.include_pmf) throw ConfigError("pareto: no front files found");

    std::vector<std::pair<std::string, std::vector<EvaluatedIndividual<Genome>>>> loaded;
    for (const auto& f : fronts) {
        auto front = read_front_csv(f.path);
        if (front.empty()) throw DataError(fmt::format("pareto: front file {} is empty", f.path.string()));
        loaded.emplace_back(f.arm, std::move(front));
    }
    const auto split = load_canonical_split(config);

    std::vector<std::string> arms;
    std::vector<std::vector<std::vector<ObjectivePoint>>> points;
    for (const auto& [arm, front] : loaded) {
        arms.push_back(arm);
        points.push_back(test_points_by_threshold(front, split, config, thresholds));
    }
    if (config.pareto.include_pmf) {
        const auto fit = pmf_train(split.train, config.model.pmf);
        const PmfModel model{fit.params, split.train.scale()};
        const auto records = predict_testset(model, split.test);
        std::vector<std::vector<ObjectivePoint>> per_theta;
        for (double t : thresholds) {
            const auto s = aggregate(threshold_curve(records, config.evaluation.n_points, split.test.scale(), t));
            per_theta.push_back({{s.one_minus_mae, s.coverage}});
        }
        arms.push_back("pmf");
        points.push_back(std::move(per_theta));
    }

    const auto rows = hypervolume_table(arms, thresholds, points);
    ensure_dir(config.output_dir);
    write_file(config.output_dir / "hypervolume.csv", hypervolume_csv(rows));
    std::string pts = "arm,theta,index,one_minus_mae,coverage\n";
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            for (std::size_t j = 0; j < points[a][t].size(); ++j) {
                pts += fmt::format("{},{},{},{},{}\n", arms[a], thresholds[t], j, points[a][t][j].one_minus_mae,
                                   points[a][t][j].coverage);
            }
        }
    }
    write_file(config.output_dir / "pareto_points.csv", pts);
    return rows;
}

}  // namespace reckless
