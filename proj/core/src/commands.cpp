#include "skssl/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "skssl/eval.hpp"
#include "skssl/features_io.hpp"
#include "skssl/ndjson.hpp"
#include "skssl/synth.hpp"

namespace skssl {

namespace fs = std::filesystem;

std::filesystem::path packs_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "packs"; }
std::filesystem::path bank_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "bank"; }
std::filesystem::path features_dir(const RunConfig& cfg) {
  return fs::path(cfg.out_dir) / "features";
}
std::filesystem::path eval_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "eval"; }

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void check_manifest_hash(const DatasetManifest& m, const RunConfig& cfg) {
  const std::string expected = hash_hex(config_hash(cfg));
  if (m.config_hash != expected) {
    throw DataError("packs were built under config hash " + m.config_hash +
                    ", current config hashes to " + expected);
  }
}

// Pack samples decoded back to normalized point sequences.
std::vector<PointSeq> decode_pack(const PackContents& pack) {
  std::vector<PointSeq> out;
  out.reserve(pack.samples.size());
  for (const auto& enc : pack.samples) out.push_back(decode_points(enc));
  return out;
}

TrainConfig effective_train_config(const RunConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.render = cfg.render;
  return tc;
}

ExtractorConfigs effective_nets(const RunConfig& cfg) {
  ExtractorConfigs nets = cfg.nets;
  nets.cnn.input_side = cfg.render.side;
  return nets;
}

}  // namespace

void cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  validate_run_config(cfg);
  if (cfg.ndjson.empty()) throw ValidationError("no [data] ndjson inputs configured");

  std::vector<RawSketch> raws;
  for (const auto& p : cfg.ndjson) {
    auto part = parse_ndjson_file(p);
    raws.insert(raws.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }

  std::set<std::string> present;
  for (const auto& r : raws) present.insert(r.category);
  std::vector<std::string> cats;
  if (cfg.categories.empty()) {
    cats.assign(present.begin(), present.end());
  } else {
    cats = cfg.categories;
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    std::string missing;
    for (const auto& c : cats) {
      if (!present.count(c)) missing += missing.empty() ? c : ", " + c;
    }
    if (!missing.empty()) {
      throw ValidationError("categories absent from the input data: " + missing);
    }
  }
  if (cats.size() > 0xffff) throw ValidationError("more than 65535 categories");

  std::map<std::string, std::uint16_t> id_of;
  for (std::size_t i = 0; i < cats.size(); ++i) id_of[cats[i]] = static_cast<std::uint16_t>(i);

  std::vector<EncodedSeq> samples;
  std::vector<int> ids;
  std::map<std::string, std::size_t> taken;
  std::size_t degenerate = 0;
  for (const auto& raw : raws) {
    auto it = id_of.find(raw.category);
    if (it == id_of.end()) continue;
    if (cfg.limit_per_category != 0 && taken[raw.category] >= cfg.limit_per_category) continue;
    PointSeq ps;
    try {
      ps = normalize(raw);
    } catch (const ValidationError&) {
      ++degenerate;
      continue;
    }
    ps.category_id = it->second;
    samples.push_back(encode(ps));
    ids.push_back(it->second);
    ++taken[raw.category];
  }
  for (const auto& c : cats) {
    if (taken[c] == 0) {
      throw ValidationError("category '" + c + "' is empty after filtering");
    }
  }

  const auto split_idx =
      assign_splits(ids, static_cast<std::uint16_t>(cats.size()), cfg.ratios, cfg.split_seed);
  const fs::path dir = packs_dir(cfg);
  fs::create_directories(dir);

  DatasetManifest m;
  m.seed = cfg.split_seed;
  m.ratios = cfg.ratios;
  m.categories = id_of;
  m.config_hash = hash_hex(config_hash(cfg));
  for (const auto& name : split_names()) {
    const auto& idx = split_idx.at(name);
    if (idx.empty()) {
      throw ValidationError("split '" + name + "' received no samples; adjust ratios or data");
    }
    std::vector<EncodedSeq> rows;
    rows.reserve(idx.size());
    SplitInfo si;
    for (std::size_t i : idx) {
      rows.push_back(samples[i]);
      ++si.per_category[cats[static_cast<std::size_t>(ids[i])]];
    }
    si.file = name + ".skpk";
    si.count = static_cast<std::uint32_t>(rows.size());
    si.sample_offset = write_pack((dir / si.file).string(), rows, cats);
    m.splits[name] = std::move(si);
  }
  write_manifest((dir / "manifest.json").string(), m);

  out << "ingested " << samples.size() << " sketches, " << cats.size() << " categories";
  if (degenerate) out << " (" << degenerate << " degenerate skipped)";
  out << "\n";
  for (const auto& c : cats) {
    out << "  " << c << ": " << taken[c];
    for (const auto& name : split_names()) out << " " << name << "=" << m.splits[name].per_category[c];
    out << "\n";
  }
  for (const auto& name : split_names()) {
    out << "  " << name << ": " << m.splits[name].count << " -> "
        << (dir / m.splits[name].file).string() << "\n";
  }
}

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& path,
               std::size_t per_category, std::ostream& out) {
  SynthConfig sc;
  sc.categories = cfg.categories;
  sc.per_category = per_category;
  sc.seed = cfg.split_seed;
  write_synth_ndjson(sc, path);
  const auto& cats = sc.categories.empty() ? synth_category_names() : sc.categories;
  out << "wrote " << cats.size() * per_category << " synthetic sketches (" << cats.size()
      << " categories x " << per_category << ") to " << path.string() << "\n";
}

void cmd_deform_preview(const RunConfig& cfg, std::size_t count, std::ostream& out) {
  validate_run_config(cfg);
  if (count == 0) throw ValidationError("preview count must be positive");

  // All presets validate before any file is written.
  std::vector<std::pair<std::string, DeformSpec>> presets;
  for (PresetKind k :
       {PresetKind::HC, PresetKind::CC, PresetKind::VC, PresetKind::LC, PresetKind::RC}) {
    presets.emplace_back(preset_name(k), preset_spec({k, cfg.intensity}));
  }

  const fs::path pdir = packs_dir(cfg);
  const auto manifest = read_manifest((pdir / "manifest.json").string());
  check_manifest_hash(manifest, cfg);
  const auto pack = read_pack((pdir / manifest.splits.at("train").file).string());

  Rng rng = make_rng(cfg.train.seed, "preview");
  std::uniform_int_distribution<std::size_t> pick(0, pack.samples.size() - 1);
  const fs::path dir = fs::path(cfg.out_dir) / "preview";
  fs::create_directories(dir);
  std::size_t files = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const PointSeq ps = decode_points(pack.samples[pick(rng)]);
    char stem[32];
    std::snprintf(stem, sizeof stem, "sketch%03zu", k);
    export_pgm(render(ps, cfg.render), (dir / (std::string(stem) + "_orig.pgm")).string());
    ++files;
    for (const auto& [pname, spec] : presets) {
      export_pgm(render(apply_deform(spec, ps), cfg.render),
                 (dir / (std::string(stem) + "_" + pname + ".pgm")).string());
      ++files;
    }
  }
  out << "wrote " << files << " preview images (" << count << " sketches x "
      << 1 + presets.size() << " columns) to " << dir.string() << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  validate_run_config(cfg);
  const fs::path pdir = packs_dir(cfg);
  const auto manifest = read_manifest((pdir / "manifest.json").string());
  check_manifest_hash(manifest, cfg);
  const auto train_data = decode_pack(read_pack((pdir / manifest.splits.at("train").file).string()));
  const auto val_data = decode_pack(read_pack((pdir / manifest.splits.at("val").file).string()));

  const auto tasks = config_tasks(cfg);
  ModuleBank bank =
      train_bank(tasks, train_data, val_data, effective_nets(cfg), effective_train_config(cfg));
  const FusionWeights w = config_fusion(cfg, bank.deforms.size());
  save_bank(bank, w, config_hash(cfg), bank_dir(cfg));

  out << "trained " << bank.module_count() << " modules (" << 2 * bank.module_count()
      << " checkpoints) -> " << bank_dir(cfg).string() << "\n";
  auto report = [&](const BankModule& m) {
    out << "  " << m.task.tag() << ": cnn val acc " << m.cnn_history.best_val_acc
        << " (epoch " << m.cnn_history.best_epoch + 1 << "), tcn val acc "
        << m.tcn_history.best_val_acc << " (epoch " << m.tcn_history.best_epoch + 1 << ")\n";
  };
  report(bank.rotation);
  for (const auto& m : bank.deforms) report(m);
}

void cmd_extract(const RunConfig& cfg, std::ostream& out) {
  validate_run_config(cfg);
  const fs::path pdir = packs_dir(cfg);
  const auto manifest = read_manifest((pdir / "manifest.json").string());
  check_manifest_hash(manifest, cfg);

  FusionWeights w;
  std::uint64_t bank_hash = 0;
  ModuleBank bank = load_bank(bank_dir(cfg), &w, &bank_hash);
  if (bank_hash != config_hash(cfg)) {
    throw DataError("bank was trained under config hash " + hash_hex(bank_hash) +
                    ", current config hashes to " + hash_hex(config_hash(cfg)));
  }
  prepare_for_extraction(bank);

  fs::create_directories(features_dir(cfg));
  for (const std::string split : {"gallery", "query"}) {
    const auto pack = read_pack((pdir / manifest.splits.at(split).file).string());
    const auto seqs = decode_pack(pack);
    FeatureFile ff;
    ff.config_hash = config_hash(cfg);
    ff.seed = bank.seed;
    ff.tag = split;
    ff.features.rows = Tensor<float>({seqs.size(), bank.feature_dim});
    ff.features.labels.reserve(seqs.size());
    // Chunked so large splits do not hold every layer activation at once.
    const std::size_t chunk = 64;
    for (std::size_t at = 0; at < seqs.size(); at += chunk) {
      const std::size_t n = std::min(chunk, seqs.size() - at);
      std::vector<PointSeq> part(seqs.begin() + at, seqs.begin() + at + n);
      Tensor<float> rows = fuse_bank_features(bank, w, part, cfg.render);
      std::copy(rows.data.begin(), rows.data.end(),
                ff.features.rows.data.begin() + at * bank.feature_dim);
    }
    for (const auto& s : seqs) ff.features.labels.push_back(s.category_id);
    const fs::path path = features_dir(cfg) / (split + ".skfm");
    write_features(ff, path);
    out << "extracted " << seqs.size() << " x " << bank.feature_dim << " " << split
        << " features -> " << path.string() << "\n";
  }
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  validate_run_config(cfg);
  const std::uint64_t expected = config_hash(cfg);
  const FeatureFile gallery = read_features(features_dir(cfg) / "gallery.skfm", expected);
  const FeatureFile query = read_features(features_dir(cfg) / "query.skfm", expected);

  const RetrievalReport ret = retrieval_eval(query.features, gallery.features);
  ProbeConfig pc;
  pc.seed = cfg.train.seed;
  const ProbeReport probe = linear_probe(gallery.features, query.features, pc);

  nlohmann::json j;
  j["config_hash"] = hash_hex(expected);
  j["seed"] = gallery.seed;
  j["retrieval"] = {{"acc_top1", ret.acc_top1},
                    {"map_top10", ret.map_top10},
                    {"query_count", ret.query_count},
                    {"gallery_count", ret.gallery_count}};
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : probe.classes) {
    classes.push_back({{"label", c.label},
                       {"train_count", c.train_count},
                       {"test_count", c.test_count},
                       {"accuracy", c.accuracy}});
  }
  j["probe"] = {{"accuracy", probe.accuracy},
                {"classes", classes},
                {"untrained_labels", probe.untrained_labels}};

  fs::create_directories(eval_dir(cfg));
  const fs::path path = eval_dir(cfg) / "report.json";
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << "\n";

  out << "acc@top1 " << ret.acc_top1 << ", mAP@top10 " << ret.map_top10 << ", probe accuracy "
      << probe.accuracy << " -> " << path.string() << "\n";
}

}  // namespace skssl
