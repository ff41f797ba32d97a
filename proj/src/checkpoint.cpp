#include "reckless/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "reckless/config.hpp"

namespace reckless {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'C', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffU));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw DataError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
    pos += 8;
    return v;
}

template <typename Matrix>
void put_matrix(std::string& out, const Matrix& m) {
    for (Eigen::Index j = 0; j < m.size(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[j]));
}

template <typename Matrix>
void get_matrix(const std::string& in, std::size_t& pos, Matrix& m) {
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = std::bit_cast<double>(get_u64(in, pos));
}

nlohmann::ordered_json scale_json(const ScoreScale& scale) {
    std::vector<double> v(scale.values().data(), scale.values().data() + scale.size());
    return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    nlohmann::ordered_json header;
    std::string payload;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            header["kind"] = std::is_same_v<T, BemfCheckpoint> ? "bemf" : "pmf";
            header["users"] = c.model.num_users();
            header["items"] = c.model.num_items();
            header["scale"] = scale_json(c.model.scale);
            if constexpr (std::is_same_v<T, BemfCheckpoint>) {
                header["scores"] = c.model.params.num_scores();
                header["factors"] = c.model.params.num_factors();
                header["hyper"] = to_json(c.hyper);
                put_matrix(payload, c.model.params.user_factors());
                put_matrix(payload, c.model.params.item_factors());
            } else {
                header["scores"] = c.model.scale.size();
                header["factors"] = c.model.params.num_factors();
                header["hyper"] = to_json(c.hyper);
                put_matrix(payload, c.model.params.user_factors);
                put_matrix(payload, c.model.params.item_factors);
            }
        },
        checkpoint);
    const std::string head = header.dump();
    std::string out(kMagic, sizeof(kMagic));
    put_u64(out, kVersion);
    put_u64(out, head.size());
    out += head;
    out += payload;
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("checkpoint: bad magic");
    }
    std::size_t pos = sizeof(kMagic);
    if (get_u64(bytes, pos) != kVersion) throw DataError("checkpoint: unsupported version");
    const auto head_len = get_u64(bytes, pos);
    if (pos + head_len > bytes.size()) throw DataError("checkpoint: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(pos, head_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("checkpoint: corrupt header: {}", e.what()));
    }
    pos += head_len;

    const auto kind = header.at("kind").get<std::string>();
    const auto users = header.at("users").get<Index>();
    const auto items = header.at("items").get<Index>();
    const auto scores = header.at("scores").get<Index>();
    const auto factors = header.at("factors").get<Index>();
    ScoreScale scale(header.at("scale").get<std::vector<double>>());
    if (scale.size() != scores) throw DataError("checkpoint: scale does not match score count");

    Checkpoint result;
    if (kind == "bemf") {
        BemfCheckpoint c{{BemfParams<double>(users, items, scores, factors), scale},
                         bemf_hyper_from_json(header.at("hyper"))};
        get_matrix(bytes, pos, c.model.params.user_factors());
        get_matrix(bytes, pos, c.model.params.item_factors());
        result = std::move(c);
    } else if (kind == "pmf") {
        using Matrix = PmfParams<double>::Matrix;
        PmfCheckpoint c{{{Matrix(users, factors), Matrix(items, factors)}, scale}, pmf_hyper_from_json(header.at("hyper"))};
        get_matrix(bytes, pos, c.model.params.user_factors);
        get_matrix(bytes, pos, c.model.params.item_factors);
        result = std::move(c);
    } else {
        throw DataError(fmt::format("checkpoint: unknown model kind '{}'", kind));
    }
    if (pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
    return result;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const auto bytes = serialize_checkpoint(checkpoint);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError(fmt::format("cannot write checkpoint {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open checkpoint {}", path.string()));
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_checkpoint(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("checkpoint {}: {}", path.string(), e.what()));
    }
}

}  // namespace reckless
