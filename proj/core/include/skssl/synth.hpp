#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skssl/rng.hpp"
#include "skssl/stroke.hpp"

namespace skssl {

// Parametric sketch families for self-contained runs: recognizable strokes
// with jittered pose, scale, and point noise, written out in the same NDJSON
// record shape ingestion reads.
const std::vector<std::string>& synth_category_names();  // 10 names

// One jittered instance. Unknown category throws ValidationError.
RawSketch synth_sketch(const std::string& category, Rng& rng);

struct SynthConfig {
  std::vector<std::string> categories;  // empty = all
  std::size_t per_category = 100;
  std::uint64_t seed = 1;
};

// Streams per_category records per category. Category order in the file does
// not affect the samples drawn: each category has its own derived rng.
void write_synth_ndjson(const SynthConfig& cfg, const std::filesystem::path& path);

}  // namespace skssl
