#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "skssl/commands.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  std::string tasks;
  std::string categories;
  std::uint64_t seed = 0;
  std::uint64_t limit = 0;
  bool paper_parity = false;
};

void add_global_flags(CLI::App* cmd, GlobalFlags& g) {
  cmd->add_option("--config", g.config_path, "INI config file");
  cmd->add_option("--seed", g.seed, "override split and training seed");
  cmd->add_option("--out", g.out_dir, "output directory");
  cmd->add_option("--tasks", g.tasks, "task list, e.g. R,HC,VC");
  cmd->add_option("--categories", g.categories, "comma-separated category allow-list");
  cmd->add_option("--limit-per-category", g.limit, "cap samples per category");
  cmd->add_flag("--paper-parity", g.paper_parity,
                "224-pixel rasters, 4096-D features, full kernel banks");
}

skssl::RunConfig build_config(const GlobalFlags& g, const CLI::App* cmd) {
  skssl::RunConfig cfg;
  if (!g.config_path.empty()) cfg = skssl::parse_config_file(g.config_path);
  if (cmd->count("--seed")) {
    cfg.split_seed = g.seed;
    cfg.train.seed = g.seed;
  }
  if (cmd->count("--out")) cfg.out_dir = g.out_dir;
  if (cmd->count("--tasks")) cfg.task_list = g.tasks;
  if (cmd->count("--categories")) {
    cfg.categories.clear();
    std::size_t start = 0;
    while (start <= g.categories.size()) {
      const auto comma = g.categories.find(',', start);
      const auto part = g.categories.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) cfg.categories.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (cmd->count("--limit-per-category")) cfg.limit_per_category = g.limit;
  if (g.paper_parity) skssl::apply_paper_parity(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised sketch representation pipeline"};
  app.require_subcommand(1);

  GlobalFlags g;
  std::string synth_path = "synth.ndjson";
  std::uint64_t synth_per_category = 100;
  std::uint64_t preview_count = 3;

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic NDJSON corpus");
  synth->add_option("--path", synth_path, "output NDJSON path");
  synth->add_option("--per-category", synth_per_category, "sketches per category");
  add_global_flags(synth, g);

  CLI::App* ingest = app.add_subcommand("ingest", "NDJSON -> split packs");
  add_global_flags(ingest, g);

  CLI::App* preview = app.add_subcommand("deform-preview", "render preset deformation grids");
  preview->add_option("--count", preview_count, "number of sketches to render");
  add_global_flags(preview, g);

  CLI::App* train = app.add_subcommand("train", "train the pretext module bank");
  add_global_flags(train, g);

  CLI::App* extract = app.add_subcommand("extract", "fused features for gallery and query");
  add_global_flags(extract, g);

  CLI::App* eval = app.add_subcommand("eval", "retrieval metrics and linear probe");
  add_global_flags(eval, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      skssl::cmd_synth(build_config(g, synth), synth_path, synth_per_category, std::cout);
    } else if (ingest->parsed()) {
      skssl::cmd_ingest(build_config(g, ingest), std::cout);
    } else if (preview->parsed()) {
      skssl::cmd_deform_preview(build_config(g, preview), preview_count, std::cout);
    } else if (train->parsed()) {
      skssl::cmd_train(build_config(g, train), std::cout);
    } else if (extract->parsed()) {
      skssl::cmd_extract(build_config(g, extract), std::cout);
    } else if (eval->parsed()) {
      skssl::cmd_eval(build_config(g, eval), std::cout);
    }
  } catch (const skssl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const skssl::StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const skssl::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const skssl::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
