#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "skssl/eval.hpp"

namespace skssl {

// On-disk feature matrix ("SKFM"): fused bank features for one split,
// stamped with the config hash and seed that produced them.
struct FeatureFile {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string tag;  // e.g. "gallery", "query"
  FeatureSet features;
};

void write_features(const FeatureFile& ff, const std::filesystem::path& path);

// Throws DataError on bad magic/version/truncation, and on a config hash
// mismatch when expected_hash is nonzero.
FeatureFile read_features(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

}  // namespace skssl
