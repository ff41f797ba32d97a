#include "reckless/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "reckless/errors.hpp"

namespace reckless {

ScoreScale::ScoreScale(std::vector<double> values) {
    if (values.size() < 2) {
        throw ConfigError("score scale needs at least two values");
    }
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (!(values[k] > values[k - 1])) {
            throw ConfigError("score scale must be strictly increasing");
        }
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ConfigError("score scale values must be finite");
    }
    values_ = std::make_shared<const Eigen::VectorXd>(
        Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

ScoreScale ScoreScale::range(double lo, double hi, double step) {
    if (!(step > 0) || !(hi > lo)) throw ConfigError("invalid score range");
    const auto n = static_cast<long>(std::llround((hi - lo) / step));
    std::vector<double> values;
    for (long k = 0; k <= n; ++k) values.push_back(lo + static_cast<double>(k) * step);
    return ScoreScale(std::move(values));
}

Index ScoreScale::index_of(double raw) const {
    const auto& v = *values_;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (std::abs(raw - v(k)) <= kMatchTolerance) return k;
    }
    throw DomainError(fmt::format("score {} is not on the rating scale", raw));
}

bool operator==(const ScoreScale& a, const ScoreScale& b) {
    if (a.size() != b.size()) return false;
    if (a.size() == 0) return true;
    return a.values() == b.values();
}

Index IdMap::intern(const std::string& raw) {
    auto [it, inserted] = index_.try_emplace(raw, static_cast<Index>(raw_.size()));
    if (inserted) raw_.push_back(raw);
    return it->second;
}

Index IdMap::find(const std::string& raw) const {
    auto it = index_.find(raw);
    return it == index_.end() ? -1 : it->second;
}

RatingsMatrix::RatingsMatrix(Index num_users, Index num_items, ScoreScale scale, std::vector<RatingTriple> entries,
                             std::shared_ptr<const IdMaps> ids)
    : num_users_(num_users), num_items_(num_items), scale_(std::move(scale)), entries_(std::move(entries)),
      ids_(std::move(ids)) {
    for (const auto& t : entries_) {
        if (t.user < 0 || t.user >= num_users_ || t.item < 0 || t.item >= num_items_) {
            throw DomainError(fmt::format("rating ({}, {}) outside a {}x{} matrix", t.user, t.item, num_users_,
                                          num_items_));
        }
        if (t.score_index < 0 || t.score_index >= scale_.size()) {
            throw DomainError(fmt::format("score index {} outside scale of size {}", t.score_index, scale_.size()));
        }
    }
    std::sort(entries_.begin(), entries_.end(), [](const RatingTriple& a, const RatingTriple& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    for (std::size_t j = 1; j < entries_.size(); ++j) {
        if (entries_[j].user == entries_[j - 1].user && entries_[j].item == entries_[j - 1].item) {
            throw DuplicateError(fmt::format("duplicate rating for user {} item {}", raw_user(entries_[j].user),
                                             raw_item(entries_[j].item)));
        }
    }
    user_offsets_.assign(static_cast<std::size_t>(num_users_) + 1, 0);
    for (const auto& t : entries_) ++user_offsets_[static_cast<std::size_t>(t.user) + 1];
    std::partial_sum(user_offsets_.begin(), user_offsets_.end(), user_offsets_.begin());
}

std::span<const RatingTriple> RatingsMatrix::user_entries(Index u) const {
    const auto b = static_cast<std::size_t>(user_offsets_[static_cast<std::size_t>(u)]);
    const auto e = static_cast<std::size_t>(user_offsets_[static_cast<std::size_t>(u) + 1]);
    return std::span<const RatingTriple>(entries_).subspan(b, e - b);
}

std::string RatingsMatrix::raw_user(Index u) const {
    if (ids_ && u < ids_->users.size()) return ids_->users.raw(u);
    return std::to_string(u);
}

std::string RatingsMatrix::raw_item(Index i) const {
    if (ids_ && i < ids_->items.size()) return ids_->items.raw(i);
    return std::to_string(i);
}

RatingsMatrix RatingsMatrix::subset(std::vector<RatingTriple> entries) const {
    return RatingsMatrix(num_users_, num_items_, scale_, std::move(entries), ids_);
}

Index RatingsMatrix::active_users() const {
    Index n = 0;
    for (Index u = 0; u < num_users_; ++u) n += user_entries(u).empty() ? 0 : 1;
    return n;
}

Index RatingsMatrix::active_items() const {
    std::vector<char> seen(static_cast<std::size_t>(num_items_), 0);
    for (const auto& t : entries_) seen[static_cast<std::size_t>(t.item)] = 1;
    return std::count(seen.begin(), seen.end(), 1);
}

namespace {

std::vector<std::string_view> split_line(std::string_view line, const std::string& delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view field, std::size_t line_no) {
    field = trim(field);
    double value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(fmt::format("non-numeric score field '{}'", field), line_no);
    }
    return value;
}

}  // namespace

DelimitedFormat canonical_format() {
    return DelimitedFormat{",", {Column::user, Column::item, Column::score}, true};
}

RatingsMatrix load_delimited(const std::filesystem::path& path, const DelimitedFormat& format,
                             const ScoreScale& scale, std::shared_ptr<IdMaps> ids) {
    if (format.delimiter.empty()) throw ConfigError("empty delimiter");
    const auto count = [&](Column c) { return std::count(format.columns.begin(), format.columns.end(), c); };
    if (count(Column::user) != 1 || count(Column::item) != 1 || count(Column::score) != 1) {
        throw ConfigError("column order must name user, item and score exactly once");
    }
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open rating file {}", path.string()));
    if (!ids) ids = std::make_shared<IdMaps>();

    std::vector<RatingTriple> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && format.skip_header) continue;
        const auto view = trim(line);
        if (view.empty()) continue;
        const auto fields = split_line(view, format.delimiter);
        if (fields.size() < format.columns.size()) {
            throw ParseError(fmt::format("{}: expected at least {} columns, found {}", path.string(),
                                         format.columns.size(), fields.size()),
                             line_no);
        }
        std::string user, item;
        double raw_score = 0;
        for (std::size_t c = 0; c < format.columns.size(); ++c) {
            switch (format.columns[c]) {
                case Column::user: user = std::string(trim(fields[c])); break;
                case Column::item: item = std::string(trim(fields[c])); break;
                case Column::score: raw_score = parse_double(fields[c], line_no); break;
                case Column::ignore: break;
            }
        }
        if (user.empty() || item.empty()) throw ParseError("empty user or item id", line_no);
        Index k = 0;
        try {
            k = scale.index_of(raw_score);
        } catch (const DomainError& e) {
            throw DomainError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
        entries.push_back({ids->users.intern(user), ids->items.intern(item), k});
    }
    const Index users = ids->users.size();
    const Index items = ids->items.size();
    return RatingsMatrix(users, items, scale, std::move(entries), std::move(ids));
}

void write_canonical(const RatingsMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out << "user,item,score\n";
    for (const auto& t : m.entries()) {
        out << fmt::format("{},{},{}\n", m.raw_user(t.user), m.raw_item(t.item), m.score(t));
    }
    if (!out) throw DataError(fmt::format("write failed for {}", path.string()));
}

DataSplit load_split(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                     const DelimitedFormat& format, const ScoreScale& scale) {
    auto ids = std::make_shared<IdMaps>();
    auto train = load_delimited(train_path, format, scale, ids);
    auto test = load_delimited(test_path, format, scale, ids);
    // Both halves must see the final id space.
    const Index users = ids->users.size();
    const Index items = ids->items.size();
    std::vector<RatingTriple> tr(train.entries().begin(), train.entries().end());
    std::vector<RatingTriple> te(test.entries().begin(), test.entries().end());
    return {RatingsMatrix(users, items, scale, std::move(tr), ids), RatingsMatrix(users, items, scale, std::move(te), ids)};
}

DataSplit random_split(const RatingsMatrix& m, double test_fraction, std::uint64_t seed) {
    if (m.empty()) throw ConfigError("cannot split an empty rating matrix");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0,1)");
    const auto n = static_cast<std::size_t>(m.size());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test == n) {
        throw ConfigError(fmt::format("test fraction {} leaves an empty train or test set for {} ratings",
                                      test_fraction, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto all = m.entries();
    std::vector<RatingTriple> test, train;
    test.reserve(n_test);
    train.reserve(n - n_test);
    for (std::size_t j = 0; j < n; ++j) (j < n_test ? test : train).push_back(all[order[j]]);
    return {m.subset(std::move(train)), m.subset(std::move(test))};
}

std::vector<Index> FoldAssignment::fold_sizes() const {
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
}

FoldAssignment kfold(const RatingsMatrix& m, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k-fold needs k >= 2");
    if (m.size() < k) throw ConfigError(fmt::format("{} ratings cannot fill {} folds", m.size(), k));
    const auto n = static_cast<std::size_t>(m.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldAssignment folds{k, std::vector<int>(n, 0)};
    for (std::size_t j = 0; j < n; ++j) folds.fold_of[order[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
    return folds;
}

DataSplit fold_split(const RatingsMatrix& m, const FoldAssignment& folds, int fold) {
    if (folds.fold_of.size() != static_cast<std::size_t>(m.size())) {
        throw ConfigError("fold assignment does not match the rating matrix");
    }
    if (fold < 0 || fold >= folds.k) throw ConfigError(fmt::format("fold {} out of range", fold));
    std::vector<RatingTriple> train, held_out;
    const auto all = m.entries();
    for (std::size_t j = 0; j < all.size(); ++j) (folds.fold_of[j] == fold ? held_out : train).push_back(all[j]);
    return {m.subset(std::move(train)), m.subset(std::move(held_out))};
}

}  // namespace reckless
