#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skssl/pack.hpp"
#include "skssl/pipeline.hpp"

namespace skssl {

// Whole-run configuration: one INI-style file, flat key=value under
// [data] [split] [raster] [tcn] [cnn] [train] [tasks] [fusion] [out].
// Unknown sections or keys are rejected rather than ignored.
struct RunConfig {
  // [data]
  std::vector<std::string> ndjson;      // ';'-separated paths
  std::vector<std::string> categories;  // allow-list; empty = everything found
  std::size_t limit_per_category = 0;   // 0 = unlimited

  // [split]
  SplitRatios ratios;
  std::uint64_t split_seed = 1;

  // [raster]  (also fixes the CNN input side)
  RenderConfig render;

  // [tcn] + [cnn]
  ExtractorConfigs nets;

  // [train]
  TrainConfig train;

  // [tasks]
  std::string task_list = "R,HC,VC";
  double intensity = kDefaultIntensity;

  // [fusion]  (R first, then deformation tasks in list order; empty = defaults)
  std::vector<double> lambda;
  std::vector<double> mu;

  // [out]
  std::string out_dir = "out";
};

RunConfig parse_config_file(const std::filesystem::path& path);

// Parses "key = value" lines already split out of a file, for CLI overrides.
void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value);

// Raster side within [16, 224], consistent feature dims, ratios summing to 1,
// parseable task list, fusion weight counts matching the task count.
void validate_run_config(const RunConfig& cfg);

// FNV-1a over the canonical "section.key=value" serialization, excluding
// [out]. Two configs hash equal iff every stage-relevant field matches.
std::uint64_t config_hash(const RunConfig& cfg);

// 224-pixel rasters, 4096-D features, full-width kernel banks, 5 CNN blocks.
void apply_paper_parity(RunConfig& cfg);

std::vector<PretextTask> config_tasks(const RunConfig& cfg);
FusionWeights config_fusion(const RunConfig& cfg, std::size_t j_modules);

}  // namespace skssl
