#pragma once

// Hyperparameter search for BeMF: genome encoding, cross-validated fitness,
// and the run ledger / front file formats.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "reckless/bemf.hpp"
#include "reckless/dataset.hpp"
#include "reckless/evaluation.hpp"
#include "reckless/moo.hpp"
#include "reckless/nsga2.hpp"

namespace reckless {

template <typename T>
struct GeneRange {
    T lo{};
    T hi{};

    bool contains(T v) const { return v >= lo && v <= hi; }
    friend bool operator==(const GeneRange&, const GeneRange&) = default;
};

struct GenomeRanges {
    GeneRange<int> factors{2, 10};
    GeneRange<double> learning_rate{1e-4, 0.5};  // sampled and recombined in log space
    GeneRange<double> l2{0.0, 0.2};
    GeneRange<double> recklessness{-2.0, 2.0};
    GeneRange<int> epochs{20, 150};

    void validate() const;
};

struct Genome {
    int factors = 4;
    double learning_rate = 0.02;
    double l2 = 0.0;
    double recklessness = 0.0;
    int epochs = 50;

    friend bool operator==(const Genome&, const Genome&) = default;
};

class BemfGenomeSpace {
public:
    using Genome = reckless::Genome;

    /// With recklessness disabled the alpha gene is pinned to 0.
    explicit BemfGenomeSpace(GenomeRanges ranges = {}, bool recklessness_enabled = true);

    Genome sample(std::mt19937_64& rng) const;
    /// Intermediate recombination on real genes, uniform choice on integer genes.
    Genome crossover(const Genome& a, const Genome& b, std::mt19937_64& rng) const;
    /// Each gene is resampled uniformly within its range with probability p.
    Genome mutate(const Genome& g, double p, std::mt19937_64& rng) const;
    bool contains(const Genome& g) const;

    const GenomeRanges& ranges() const { return ranges_; }
    bool recklessness_enabled() const { return recklessness_enabled_; }

private:
    GenomeRanges ranges_;
    bool recklessness_enabled_;
};

/// Hyperparameters for one training run: genes from `genome`, the rest from `base`.
BemfHyper to_hyper(const Genome& genome, const BemfHyper& base, std::uint64_t seed);

std::uint64_t genome_hash(const Genome& genome);

/// Mix a run seed, a genome hash and a fold id into a training seed.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t genome_hash, int fold);

struct FitnessResult {
    ObjectivePoint fitness;
    bool diverged = false;
    std::string message;
};

/// Train on split.train, score on split.test with the thresholded aggregates.
/// Divergence yields the worst point (0,0) and diverged = true.
FitnessResult holdout_fitness(const Genome& genome, const DataSplit& split, int n_points, const BemfHyper& base,
                              std::uint64_t seed);

/// Unweighted mean of the per-fold aggregates. Fold f trains with
/// derive_seed(run_seed, genome_hash(genome), f).
FitnessResult cv_fitness(const Genome& genome, const RatingsMatrix& train, const FoldAssignment& folds,
                         int n_points, const BemfHyper& base, std::uint64_t run_seed);

/// One JSON object per line: generation, index, genome, fitness, diverged.
class RunLedger {
public:
    /// Truncates any previous ledger at `path`.
    explicit RunLedger(const std::filesystem::path& path);
    void append(int generation, int index, const Genome& genome, const FitnessResult& result);

private:
    std::ofstream out_;
};

struct LedgerRecord {
    int generation = 0;
    int index = 0;
    Genome genome;
    FitnessResult result;
};

std::vector<LedgerRecord> read_ledger(const std::filesystem::path& path);

/// "one_minus_mae,coverage,factors,learning_rate,l2,recklessness,epochs"
void write_front_csv(std::span<const EvaluatedIndividual<Genome>> front, const std::filesystem::path& path);
std::vector<EvaluatedIndividual<Genome>> read_front_csv(const std::filesystem::path& path);

}  // namespace reckless
