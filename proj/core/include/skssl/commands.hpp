#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "skssl/config.hpp"

namespace skssl {

// Stage entry points behind the CLI. Each validates the config, checks the
// config hash embedded in its input artifacts, writes its outputs under
// cfg.out_dir, and prints a deterministic summary. Failures throw; the CLI
// maps exception types to exit codes.

// Conventional layout under cfg.out_dir:
//   packs/{train,val,gallery,query}.skpk + packs/manifest.json
//   preview/*.pgm   bank/   features/{gallery,query}.skfm   eval/report.json

std::filesystem::path packs_dir(const RunConfig& cfg);
std::filesystem::path bank_dir(const RunConfig& cfg);
std::filesystem::path features_dir(const RunConfig& cfg);
std::filesystem::path eval_dir(const RunConfig& cfg);

// NDJSON -> normalized, encoded, stratified packs. Degenerate records
// (zero geometric extent) are skipped and counted.
void cmd_ingest(const RunConfig& cfg, std::ostream& out);

// Synthetic NDJSON corpus at `path`; uses cfg categories or the full set.
void cmd_synth(const RunConfig& cfg, const std::filesystem::path& path,
               std::size_t per_category, std::ostream& out);

// Renders `count` training sketches, original plus all five presets (six PGM
// files each). Every preset is validated before the first file is written.
void cmd_deform_preview(const RunConfig& cfg, std::size_t count, std::ostream& out);

// Trains the full module bank on the train/val packs.
void cmd_train(const RunConfig& cfg, std::ostream& out);

// Fused bank features for the gallery and query packs.
void cmd_extract(const RunConfig& cfg, std::ostream& out);

// Retrieval metrics plus linear probe; writes eval/report.json.
void cmd_eval(const RunConfig& cfg, std::ostream& out);

}  // namespace skssl
