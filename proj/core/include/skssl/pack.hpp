#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skssl/stroke.hpp"

namespace skssl {

// Split ratios used when assigning samples; must sum to 1.
struct SplitRatios {
  double train = 0.5;
  double val = 0.1;
  double gallery = 0.3;
  double query = 0.1;
};

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names = {"train", "val", "gallery",
                                                 "query"};
  return names;
}

struct SplitInfo {
  std::string file;
  std::uint32_t count = 0;
  std::uint64_t sample_offset = 0;  // byte offset of the first sample record
  std::map<std::string, std::uint32_t> per_category;
};

// Sidecar describing a packed dataset: category ids, split membership and the
// seed that produced the assignment. Splits are disjoint by construction.
struct DatasetManifest {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::map<std::string, std::uint16_t> categories;  // name -> id
  std::map<std::string, SplitInfo> splits;          // split name -> info
  std::string config_hash;

  std::string category_name(std::uint16_t id) const;
};

// Pack file: magic "SKPK", u32 version, u32 sample count, category table,
// then per sample: u16 category id, u8 valid_len, 100x4 little-endian f32.
inline constexpr char kPackMagic[4] = {'S', 'K', 'P', 'K'};
inline constexpr std::uint32_t kPackVersion = 1;

struct PackContents {
  std::vector<std::string> categories;  // index = id
  std::vector<EncodedSeq> samples;
  std::uint64_t sample_offset = 0;
};

// Writes samples plus the category table; rejects an empty sample list.
// Returns the byte offset where sample records start.
std::uint64_t write_pack(const std::string& path,
                         const std::vector<EncodedSeq>& samples,
                         const std::vector<std::string>& categories);

PackContents read_pack(const std::string& path);

// Seeded stratified split assignment: for each category, shuffles that
// category's sample indices with an RNG derived from (seed, category) and
// cuts by the ratios. Every sample lands in exactly one split.
std::map<std::string, std::vector<std::size_t>> assign_splits(
    const std::vector<int>& category_ids, std::uint16_t category_count,
    const SplitRatios& ratios, std::uint64_t seed);

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

}  // namespace skssl
