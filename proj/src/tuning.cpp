#include "reckless/tuning.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace reckless {

void GenomeRanges::validate() const {
    if (factors.lo < 1 || factors.hi < factors.lo) throw ConfigError("genome: invalid factors range");
    if (!(learning_rate.lo > 0) || learning_rate.hi < learning_rate.lo) {
        throw ConfigError("genome: learning rate range must be positive and ordered");
    }
    if (l2.lo < 0 || l2.hi < l2.lo) throw ConfigError("genome: invalid l2 range");
    if (!std::isfinite(recklessness.lo) || !std::isfinite(recklessness.hi) || recklessness.hi < recklessness.lo) {
        throw ConfigError("genome: invalid recklessness range");
    }
    if (epochs.lo < 1 || epochs.hi < epochs.lo) throw ConfigError("genome: invalid epochs range");
}

BemfGenomeSpace::BemfGenomeSpace(GenomeRanges ranges, bool recklessness_enabled)
    : ranges_(ranges), recklessness_enabled_(recklessness_enabled) {
    ranges_.validate();
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

double log_uniform(std::mt19937_64& rng, const GeneRange<double>& r) {
    return std::exp(uniform(rng, std::log(r.lo), std::log(r.hi)));
}

int uniform_int(std::mt19937_64& rng, const GeneRange<int>& r) {
    return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}

double blend(double a, double b, double t, const GeneRange<double>& r) {
    return std::clamp(a + t * (b - a), r.lo, r.hi);
}

}  // namespace

Genome BemfGenomeSpace::sample(std::mt19937_64& rng) const {
    Genome g;
    g.factors = uniform_int(rng, ranges_.factors);
    g.learning_rate = log_uniform(rng, ranges_.learning_rate);
    g.l2 = uniform(rng, ranges_.l2.lo, ranges_.l2.hi);
    g.recklessness = recklessness_enabled_ ? uniform(rng, ranges_.recklessness.lo, ranges_.recklessness.hi) : 0.0;
    g.epochs = uniform_int(rng, ranges_.epochs);
    return g;
}

Genome BemfGenomeSpace::crossover(const Genome& a, const Genome& b, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Genome child;
    child.factors = coin(rng) ? a.factors : b.factors;
    const double t_lr = unit(rng);
    child.learning_rate = std::clamp(std::exp(std::log(a.learning_rate) + t_lr * (std::log(b.learning_rate) -
                                                                                  std::log(a.learning_rate))),
                                     ranges_.learning_rate.lo, ranges_.learning_rate.hi);
    child.l2 = blend(a.l2, b.l2, unit(rng), ranges_.l2);
    const double t_alpha = unit(rng);
    child.recklessness = recklessness_enabled_ ? blend(a.recklessness, b.recklessness, t_alpha, ranges_.recklessness)
                                               : 0.0;
    child.epochs = coin(rng) ? a.epochs : b.epochs;
    return child;
}

Genome BemfGenomeSpace::mutate(const Genome& g, double p, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Genome out = g;
    if (unit(rng) < p) out.factors = uniform_int(rng, ranges_.factors);
    if (unit(rng) < p) out.learning_rate = log_uniform(rng, ranges_.learning_rate);
    if (unit(rng) < p) out.l2 = uniform(rng, ranges_.l2.lo, ranges_.l2.hi);
    if (unit(rng) < p && recklessness_enabled_) {
        out.recklessness = uniform(rng, ranges_.recklessness.lo, ranges_.recklessness.hi);
    }
    if (unit(rng) < p) out.epochs = uniform_int(rng, ranges_.epochs);
    return out;
}

bool BemfGenomeSpace::contains(const Genome& g) const {
    const bool alpha_ok = recklessness_enabled_ ? ranges_.recklessness.contains(g.recklessness) : g.recklessness == 0.0;
    return ranges_.factors.contains(g.factors) && ranges_.learning_rate.contains(g.learning_rate) &&
           ranges_.l2.contains(g.l2) && alpha_ok && ranges_.epochs.contains(g.epochs);
}

BemfHyper to_hyper(const Genome& genome, const BemfHyper& base, std::uint64_t seed) {
    BemfHyper h = base;
    h.factors = genome.factors;
    h.learning_rate = genome.learning_rate;
    h.l2 = genome.l2;
    h.recklessness = genome.recklessness;
    h.epochs = genome.epochs;
    h.seed = seed;
    return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
        h ^= (word >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t genome_hash(const Genome& g) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(g.factors)));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(g.learning_rate));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(g.l2));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(g.recklessness));
    h = fnv1a(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(g.epochs)));
    return h;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t hash, int fold) {
    return splitmix64(run_seed ^ splitmix64(hash ^ splitmix64(static_cast<std::uint64_t>(fold))));
}

FitnessResult holdout_fitness(const Genome& genome, const DataSplit& split, int n_points, const BemfHyper& base,
                              std::uint64_t seed) {
    try {
        const auto hyper = to_hyper(genome, base, seed);
        auto fit = bemf_train(split.train, hyper);
        const BemfModel model{std::move(fit.params), split.train.scale()};
        const auto eval = evaluate(model, split.test, n_points);
        return {{eval.score.one_minus_mae, eval.score.coverage}, false, {}};
    } catch (const DivergenceError& e) {
        return {{0.0, 0.0}, true, e.what()};
    }
}

FitnessResult cv_fitness(const Genome& genome, const RatingsMatrix& train, const FoldAssignment& folds,
                         int n_points, const BemfHyper& base, std::uint64_t run_seed) {
    const auto hash = genome_hash(genome);
    FitnessResult mean;
    for (int f = 0; f < folds.k; ++f) {
        const auto r = holdout_fitness(genome, fold_split(train, folds, f), n_points, base, derive_seed(run_seed, hash, f));
        if (r.diverged) return r;
        mean.fitness.one_minus_mae += r.fitness.one_minus_mae;
        mean.fitness.coverage += r.fitness.coverage;
    }
    mean.fitness.one_minus_mae /= folds.k;
    mean.fitness.coverage /= folds.k;
    return mean;
}

namespace {

nlohmann::ordered_json genome_json(const Genome& g) {
    nlohmann::ordered_json j;
    j["factors"] = g.factors;
    j["learning_rate"] = g.learning_rate;
    j["l2"] = g.l2;
    j["recklessness"] = g.recklessness;
    j["epochs"] = g.epochs;
    return j;
}

Genome genome_from_json(const nlohmann::json& j) {
    return {j.at("factors").get<int>(), j.at("learning_rate").get<double>(), j.at("l2").get<double>(),
            j.at("recklessness").get<double>(), j.at("epochs").get<int>()};
}

}  // namespace

RunLedger::RunLedger(const std::filesystem::path& path) : out_(path, std::ios::trunc | std::ios::binary) {
    if (!out_) throw DataError(fmt::format("cannot open ledger {}", path.string()));
}

void RunLedger::append(int generation, int index, const Genome& genome, const FitnessResult& result) {
    nlohmann::ordered_json j;
    j["generation"] = generation;
    j["index"] = index;
    j["genome"] = genome_json(genome);
    j["fitness"] = {{"one_minus_mae", result.fitness.one_minus_mae}, {"coverage", result.fitness.coverage}};
    j["diverged"] = result.diverged;
    out_ << j.dump() << '\n';
    out_.flush();
}

std::vector<LedgerRecord> read_ledger(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open ledger {}", path.string()));
    std::vector<LedgerRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            LedgerRecord r;
            r.generation = j.at("generation").get<int>();
            r.index = j.at("index").get<int>();
            r.genome = genome_from_json(j.at("genome"));
            r.result.fitness = {j.at("fitness").at("one_minus_mae").get<double>(),
                                j.at("fitness").at("coverage").get<double>()};
            r.result.diverged = j.at("diverged").get<bool>();
            records.push_back(r);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(fmt::format("{}: {}", path.string(), e.what()), line_no);
        }
    }
    return records;
}

void write_front_csv(std::span<const EvaluatedIndividual<Genome>> front, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out << "one_minus_mae,coverage,factors,learning_rate,l2,recklessness,epochs\n";
    for (const auto& ind : front) {
        const auto& g = ind.genome;
        out << fmt::format("{},{},{},{},{},{},{}\n", ind.fitness.one_minus_mae, ind.fitness.coverage, g.factors,
                           g.learning_rate, g.l2, g.recklessness, g.epochs);
    }
}

std::vector<EvaluatedIndividual<Genome>> read_front_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open front file {}", path.string()));
    std::vector<EvaluatedIndividual<Genome>> front;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 7) throw ParseError(fmt::format("{}: expected 7 columns", path.string()), line_no);
        try {
            EvaluatedIndividual<Genome> ind;
            ind.fitness = {std::stod(f[0]), std::stod(f[1])};
            ind.genome = {std::stoi(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stoi(f[6])};
            front.push_back(ind);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("{}: non-numeric field", path.string()), line_no);
        }
    }
    return front;
}

}  // namespace reckless
