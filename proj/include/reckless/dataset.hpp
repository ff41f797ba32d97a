#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace reckless {

using Index = std::int64_t;

/// Ordered set of admissible rating values x_1 < ... < x_s.
/// Copies share the underlying storage.
class ScoreScale {
public:
    static constexpr double kMatchTolerance = 1e-9;

    ScoreScale() = default;
    explicit ScoreScale(std::vector<double> values);

    /// Evenly spaced scale lo, lo+step, ..., hi.
    static ScoreScale range(double lo, double hi, double step);

    Index size() const { return values_ ? static_cast<Index>(values_->size()) : 0; }
    double operator[](Index k) const { return (*values_)[static_cast<std::size_t>(k)]; }
    double min() const { return (*values_)(0); }
    double max() const { return (*values_)(values_->size() - 1); }
    double span() const { return max() - min(); }
    const Eigen::VectorXd& values() const { return *values_; }

    /// Index k with |raw - x_k| <= 1e-9. Throws DomainError otherwise.
    Index index_of(double raw) const;

    friend bool operator==(const ScoreScale& a, const ScoreScale& b);

private:
    std::shared_ptr<const Eigen::VectorXd> values_;
};

inline Index score_to_index(const ScoreScale& scale, double raw) { return scale.index_of(raw); }

struct RatingTriple {
    Index user = 0;
    Index item = 0;
    Index score_index = 0;

    friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

/// Raw external id <-> dense index, assigned in first-appearance order.
class IdMap {
public:
    Index intern(const std::string& raw);
    Index find(const std::string& raw) const;  // -1 when absent
    const std::string& raw(Index idx) const { return raw_[static_cast<std::size_t>(idx)]; }
    Index size() const { return static_cast<Index>(raw_.size()); }

private:
    std::unordered_map<std::string, Index> index_;
    std::vector<std::string> raw_;
};

struct IdMaps {
    IdMap users;
    IdMap items;
};

/// Sparse user x item rating matrix. Entries are stored sorted by (user, item)
/// with a per-user offset table; the object is immutable once built.
class RatingsMatrix {
public:
    RatingsMatrix() = default;

    /// Throws DuplicateError on a repeated (user,item) pair and DomainError on
    /// out-of-range indices.
    RatingsMatrix(Index num_users, Index num_items, ScoreScale scale, std::vector<RatingTriple> entries,
                  std::shared_ptr<const IdMaps> ids = nullptr);

    Index num_users() const { return num_users_; }
    Index num_items() const { return num_items_; }
    Index size() const { return static_cast<Index>(entries_.size()); }
    bool empty() const { return entries_.empty(); }
    const ScoreScale& scale() const { return scale_; }
    std::span<const RatingTriple> entries() const { return entries_; }
    std::span<const RatingTriple> user_entries(Index u) const;
    double score(const RatingTriple& t) const { return scale_[t.score_index]; }

    /// Raw-id sidecar; null for synthetic matrices.
    const std::shared_ptr<const IdMaps>& ids() const { return ids_; }
    std::string raw_user(Index u) const;
    std::string raw_item(Index i) const;

    /// Same shape, scale and ids, restricted to the given entries.
    RatingsMatrix subset(std::vector<RatingTriple> entries) const;

    /// Number of distinct users/items that actually carry a rating.
    Index active_users() const;
    Index active_items() const;

private:
    Index num_users_ = 0;
    Index num_items_ = 0;
    ScoreScale scale_;
    std::vector<RatingTriple> entries_;
    std::vector<Index> user_offsets_;
    std::shared_ptr<const IdMaps> ids_;
};

enum class Column { user, item, score, ignore };

struct DelimitedFormat {
    std::string delimiter = "\t";
    /// Column roles in file order. Columns beyond this list are ignored.
    std::vector<Column> columns{Column::user, Column::item, Column::score};
    bool skip_header = false;
};

/// Parse a delimited rating file. Raw ids are interned into `ids` (pass a
/// shared map to keep train/test indices consistent across files).
RatingsMatrix load_delimited(const std::filesystem::path& path, const DelimitedFormat& format,
                             const ScoreScale& scale, std::shared_ptr<IdMaps> ids = nullptr);

/// Canonical export: header "user,item,score" followed by raw ids and raw values.
void write_canonical(const RatingsMatrix& m, const std::filesystem::path& path);

DelimitedFormat canonical_format();

struct DataSplit {
    RatingsMatrix train;
    RatingsMatrix test;
};

/// Load a pre-split pair of files with one shared id space (train ids first).
DataSplit load_split(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     const DelimitedFormat& format, const ScoreScale& scale);

DataSplit random_split(const RatingsMatrix& m, double test_fraction, std::uint64_t seed);

struct FoldAssignment {
    int k = 0;
    /// fold_of[j] is the fold of the j-th entry of the source matrix.
    std::vector<int> fold_of;

    std::vector<Index> fold_sizes() const;
};

FoldAssignment kfold(const RatingsMatrix& m, int k, std::uint64_t seed);

/// Train on every fold except `fold`, validate on `fold`.
DataSplit fold_split(const RatingsMatrix& m, const FoldAssignment& folds, int fold);

}  // namespace reckless
