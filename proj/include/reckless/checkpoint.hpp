#pragma once

// Model checkpoints: an 8-byte magic, a length-prefixed JSON header holding
// the model kind, dimensions, score scale and hyperparameters, then the
// factor arrays as little-endian IEEE-754 doubles (users first, row-major).
// Loading reproduces every factor bit for bit.

#include <filesystem>
#include <string>
#include <variant>

#include "reckless/bemf.hpp"
#include "reckless/pmf.hpp"

namespace reckless {

struct BemfCheckpoint {
    BemfModel model;
    BemfHyper hyper;
};

struct PmfCheckpoint {
    PmfModel model;
    PmfHyper hyper;
};

using Checkpoint = std::variant<BemfCheckpoint, PmfCheckpoint>;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace reckless
