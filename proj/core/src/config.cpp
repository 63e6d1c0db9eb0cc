#include "skssl/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace skssl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    std::string part =
        trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": '" + v + "' is not a number");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
    std::size_t used = 0;
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": '" + v + "' is not a non-negative integer");
  }
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& part : split_list(v, ','))
    out.push_back(static_cast<std::size_t>(parse_u64(key, part)));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split_list(v, ',')) out.push_back(parse_double(key, part));
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value) {
  const std::string qual = section + "." + key;
  if (section == "data") {
    if (key == "ndjson") cfg.ndjson = split_list(value, ';');
    else if (key == "categories") cfg.categories = split_list(value, ',');
    else if (key == "limit_per_category") cfg.limit_per_category = parse_u64(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "split") {
    if (key == "seed") cfg.split_seed = parse_u64(qual, value);
    else if (key == "train") cfg.ratios.train = parse_double(qual, value);
    else if (key == "val") cfg.ratios.val = parse_double(qual, value);
    else if (key == "gallery") cfg.ratios.gallery = parse_double(qual, value);
    else if (key == "query") cfg.ratios.query = parse_double(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "raster") {
    if (key == "side") cfg.render.side = static_cast<std::size_t>(parse_u64(qual, value));
    else if (key == "margin") cfg.render.margin = static_cast<std::size_t>(parse_u64(qual, value));
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "tcn") {
    if (key == "feature_dim") cfg.nets.tcn.feature_dim = parse_u64(qual, value);
    else if (key == "width") cfg.nets.tcn.width_multiplier = parse_double(qual, value);
    else if (key == "kernels") cfg.nets.tcn.kernel_sizes = parse_size_list(qual, value);
    else if (key == "channels") cfg.nets.tcn.layer_channels = parse_size_list(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "cnn") {
    if (key == "feature_dim") cfg.nets.cnn.feature_dim = parse_u64(qual, value);
    else if (key == "channels") cfg.nets.cnn.block_channels = parse_size_list(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "train") {
    if (key == "epochs") cfg.train.epochs = parse_u64(qual, value);
    else if (key == "batch") cfg.train.batch_samples = parse_u64(qual, value);
    else if (key == "patience") cfg.train.patience = parse_u64(qual, value);
    else if (key == "cnn_optimizer") cfg.train.cnn_opt.kind = value;
    else if (key == "cnn_lr") cfg.train.cnn_opt.lr = parse_double(qual, value);
    else if (key == "tcn_optimizer") cfg.train.tcn_opt.kind = value;
    else if (key == "tcn_lr") cfg.train.tcn_opt.lr = parse_double(qual, value);
    else if (key == "seed") cfg.train.seed = parse_u64(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "tasks") {
    if (key == "list") cfg.task_list = value;
    else if (key == "intensity") cfg.intensity = parse_double(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "fusion") {
    if (key == "lambda") cfg.lambda = parse_double_list(qual, value);
    else if (key == "mu") cfg.mu = parse_double_list(qual, value);
    else throw ValidationError("unknown config key " + qual);
  } else if (section == "out") {
    if (key == "dir") cfg.out_dir = value;
    else throw ValidationError("unknown config key " + qual);
  } else {
    throw ValidationError("unknown config section [" + section + "]");
  }
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read config file " + path.string());
  RunConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                         ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                       ": key before any [section]");
    }
    apply_config_line(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.render.side < 16 || cfg.render.side > 224) {
    throw ValidationError("raster side " + std::to_string(cfg.render.side) +
                          " outside [16, 224]");
  }
  validate_render_config(cfg.render);
  TcnConfig tcn = cfg.nets.tcn;
  validate_tcn_config(tcn);
  CnnConfig cnn = cfg.nets.cnn;
  cnn.input_side = cfg.render.side;
  validate_cnn_config(cnn);
  if (cfg.nets.tcn.feature_dim != cfg.nets.cnn.feature_dim) {
    throw ValidationError("tcn feature_dim " + std::to_string(cfg.nets.tcn.feature_dim) +
                          " differs from cnn feature_dim " +
                          std::to_string(cfg.nets.cnn.feature_dim));
  }
  const double sum = cfg.ratios.train + cfg.ratios.val + cfg.ratios.gallery + cfg.ratios.query;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("split ratios sum to " + fmt_double(sum) + ", expected 1");
  }
  for (double r : {cfg.ratios.train, cfg.ratios.val, cfg.ratios.gallery, cfg.ratios.query}) {
    if (r < 0.0 || r > 1.0) throw ValidationError("split ratio outside [0,1]");
  }
  if (cfg.train.epochs == 0) throw ValidationError("train.epochs must be positive");
  if (cfg.train.batch_samples == 0) throw ValidationError("train.batch must be positive");
  for (const auto& o : {cfg.train.cnn_opt, cfg.train.tcn_opt}) {
    if (o.kind != "sgd" && o.kind != "adam") {
      throw ValidationError("unknown optimizer '" + o.kind + "'");
    }
    if (!(o.lr > 0.0)) throw ValidationError("learning rate must be positive");
  }
  const auto tasks = parse_task_list(cfg.task_list, cfg.intensity);
  const std::size_t J = tasks.size() - 1;
  if (!cfg.lambda.empty() && cfg.lambda.size() != J + 1) {
    throw ValidationError("fusion.lambda needs " + std::to_string(J + 1) + " weights, got " +
                          std::to_string(cfg.lambda.size()));
  }
  if (!cfg.mu.empty() && cfg.mu.size() != J + 1) {
    throw ValidationError("fusion.mu needs " + std::to_string(J + 1) + " weights, got " +
                          std::to_string(cfg.mu.size()));
  }
  validate_fusion(config_fusion(cfg, J), J);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::vector<std::string> lines;
  auto put = [&](const std::string& k, const std::string& v) { lines.push_back(k + "=" + v); };
  auto put_u = [&](const std::string& k, std::uint64_t v) { put(k, std::to_string(v)); };
  auto put_d = [&](const std::string& k, double v) { put(k, fmt_double(v)); };
  auto put_list = [&](const std::string& k, const auto& vs, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (i) s += ',';
      s += fmt(vs[i]);
    }
    put(k, s);
  };
  auto fmt_u = [](std::size_t v) { return std::to_string(v); };
  auto fmt_s = [](const std::string& v) { return v; };

  put_list("data.ndjson", cfg.ndjson, fmt_s);
  put_list("data.categories", cfg.categories, fmt_s);
  put_u("data.limit_per_category", cfg.limit_per_category);
  put_u("split.seed", cfg.split_seed);
  put_d("split.train", cfg.ratios.train);
  put_d("split.val", cfg.ratios.val);
  put_d("split.gallery", cfg.ratios.gallery);
  put_d("split.query", cfg.ratios.query);
  put_u("raster.side", cfg.render.side);
  put_u("raster.margin", cfg.render.margin);
  put_u("tcn.feature_dim", cfg.nets.tcn.feature_dim);
  put_d("tcn.width", cfg.nets.tcn.width_multiplier);
  put_list("tcn.kernels", cfg.nets.tcn.kernel_sizes, fmt_u);
  put_list("tcn.channels", cfg.nets.tcn.layer_channels, fmt_u);
  put_u("cnn.feature_dim", cfg.nets.cnn.feature_dim);
  put_list("cnn.channels", cfg.nets.cnn.block_channels, fmt_u);
  put_u("train.epochs", cfg.train.epochs);
  put_u("train.batch", cfg.train.batch_samples);
  put_u("train.patience", cfg.train.patience);
  put("train.cnn_optimizer", cfg.train.cnn_opt.kind);
  put_d("train.cnn_lr", cfg.train.cnn_opt.lr);
  put("train.tcn_optimizer", cfg.train.tcn_opt.kind);
  put_d("train.tcn_lr", cfg.train.tcn_opt.lr);
  put_u("train.seed", cfg.train.seed);
  put("tasks.list", cfg.task_list);
  put_d("tasks.intensity", cfg.intensity);
  put_list("fusion.lambda", cfg.lambda, fmt_double);
  put_list("fusion.mu", cfg.mu, fmt_double);

  std::sort(lines.begin(), lines.end());
  std::string all;
  for (const auto& l : lines) {
    all += l;
    all += '\n';
  }
  return fnv1a(all);
}

void apply_paper_parity(RunConfig& cfg) {
  cfg.render.side = 224;
  cfg.nets.tcn.feature_dim = 4096;
  cfg.nets.tcn.width_multiplier = 1.0;
  cfg.nets.tcn.kernel_sizes = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  cfg.nets.tcn.layer_channels = {16, 32, 64, 128};
  cfg.nets.cnn.feature_dim = 4096;
  cfg.nets.cnn.block_channels = {16, 32, 64, 128, 256};
}

std::vector<PretextTask> config_tasks(const RunConfig& cfg) {
  return parse_task_list(cfg.task_list, cfg.intensity);
}

FusionWeights config_fusion(const RunConfig& cfg, std::size_t j_modules) {
  FusionWeights w = default_fusion(j_modules);
  if (!cfg.lambda.empty()) {
    w.lambda_r = cfg.lambda.front();
    w.lambda_d.assign(cfg.lambda.begin() + 1, cfg.lambda.end());
  }
  if (!cfg.mu.empty()) {
    w.mu_r = cfg.mu.front();
    w.mu_d.assign(cfg.mu.begin() + 1, cfg.mu.end());
  }
  return w;
}

}  // namespace skssl
