#include "skssl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "skssl/loss.hpp"

namespace skssl {

using nlohmann::json;

PretextTask rotation_task() {
  PretextTask t;
  t.kind = PretextTask::Kind::Rotation4;
  return t;
}

PretextTask deform_task(const DeformSpec& spec) {
  validate_spec(spec);
  if (spec.is_identity()) throw ValidationError("deformation task needs a non-identity spec");
  PretextTask t;
  t.kind = PretextTask::Kind::DeformBinary;
  t.spec = spec;
  return t;
}

PretextTask parse_task(const std::string& name, double intensity) {
  if (name == "R") return rotation_task();
  DeformSpec spec;
  std::size_t start = 0;
  bool first = true;
  while (start <= name.size()) {
    const auto amp = name.find('&', start);
    const std::string part =
        name.substr(start, amp == std::string::npos ? std::string::npos : amp - start);
    const auto kind = preset_from_name(part);
    if (!kind) {
      throw ValidationError("unknown task '" + part + "' (expected R or a preset name)");
    }
    DeformSpec p = preset_spec({*kind, intensity});
    spec = first ? p : compose(spec, p);
    first = false;
    if (amp == std::string::npos) break;
    start = amp + 1;
  }
  return deform_task(spec);
}

std::vector<PretextTask> parse_task_list(const std::string& csv, double intensity) {
  std::vector<PretextTask> tasks;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    std::string part =
        csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    // trim
    while (!part.empty() && (part.front() == ' ' || part.front() == '\t')) part.erase(0, 1);
    while (!part.empty() && (part.back() == ' ' || part.back() == '\t')) part.pop_back();
    if (!part.empty()) tasks.push_back(parse_task(part, intensity));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (tasks.empty()) throw ValidationError("empty task list");
  std::size_t rotations = 0;
  for (const auto& t : tasks) rotations += t.kind == PretextTask::Kind::Rotation4;
  if (rotations != 1) {
    throw ValidationError("task list must contain the rotation task R exactly once");
  }
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t j = i + 1; j < tasks.size(); ++j)
      if (tasks[i].tag() == tasks[j].tag()) {
        throw ValidationError("duplicate task '" + tasks[i].tag() + "'");
      }
  return tasks;
}

std::string branch_name(Branch b) { return b == Branch::Cnn ? "cnn" : "tcn"; }

namespace {

RotationAngle angle_of_label(int label) {
  switch (label) {
    case 0: return RotationAngle::Deg0;
    case 1: return RotationAngle::Deg90;
    case 2: return RotationAngle::Deg180;
    case 3: return RotationAngle::Deg270;
  }
  throw ValidationError("rotation label outside [0,4)");
}

void put_cnn_row(Tensor<float>& dst, std::size_t row, const Tensor<float>& vol) {
  std::copy(vol.data.begin(), vol.data.end(), dst.data.begin() + row * vol.numel());
}

void put_tcn_row(Tensor<float>& dst, std::size_t row, const EncodedSeq& enc) {
  std::copy(enc.rows.begin(), enc.rows.end(),
            dst.data.begin() + row * (kSeqRows * kSeqCols));
}

}  // namespace

PretextBatch gen_pretext_batch(const PretextTask& task, const std::vector<PointSeq>& samples,
                               const RenderConfig& rcfg) {
  validate_render_config(rcfg);
  if (samples.empty()) throw ValidationError("gen_pretext_batch: no samples");
  if (task.kind == PretextTask::Kind::DeformBinary) validate_spec(task.spec);
  const std::size_t L = task.classes();
  const std::size_t total = samples.size() * L;
  PretextBatch out;
  out.cnn = Tensor<float>({total, 3, rcfg.side, rcfg.side});
  out.tcn = Tensor<float>({total, 1, kSeqRows, kSeqCols});
  out.labels.reserve(total);
  std::size_t row = 0;
  for (const auto& seq : samples) {
    for (std::size_t l = 0; l < L; ++l) {
      PointSeq variant;
      if (task.kind == PretextTask::Kind::Rotation4) {
        variant = rotate(seq, angle_of_label(static_cast<int>(l)));
      } else {
        variant = l == 0 ? seq : apply_deform(task.spec, seq);
      }
      put_cnn_row(out.cnn, row, tile_channels(render(variant, rcfg)));
      put_tcn_row(out.tcn, row, encode(variant));
      out.labels.push_back(static_cast<int>(l));
      ++row;
    }
  }
  return out;
}

std::uint64_t module_seed(std::uint64_t master, const PretextTask& task, Branch branch) {
  return derive_seed(master, "module/" + task.tag() + "/" + branch_name(branch));
}

namespace {

struct Snapshot {
  std::vector<Tensor<float>> params;
  std::vector<Tensor<float>> buffers;
};

Snapshot take_snapshot(NetGraph<float>& net) {
  Snapshot s;
  for (const auto& p : net.params()) s.params.push_back(*p.value);
  for (const auto& b : net.buffers()) s.buffers.push_back(*b.value);
  return s;
}

void restore_snapshot(NetGraph<float>& net, const Snapshot& s) {
  auto params = net.params();
  auto buffers = net.buffers();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = s.params[i];
  for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].value = s.buffers[i];
}

NetGraph<float> build_branch(const PretextTask& task, Branch branch,
                             const ExtractorConfigs& nets) {
  if (nets.tcn.feature_dim != nets.cnn.feature_dim) {
    throw ValidationError("branch feature dims differ: tcn " +
                          std::to_string(nets.tcn.feature_dim) + " vs cnn " +
                          std::to_string(nets.cnn.feature_dim));
  }
  return branch == Branch::Cnn ? build_cnn(nets.cnn, task.classes())
                               : build_tcn(nets.tcn, task.classes());
}

// Mean loss and accuracy of one branch over a dataset, in eval mode.
EpochStats eval_pass(NetGraph<float>& net, const PretextTask& task, Branch branch,
                     const std::vector<PointSeq>& data, const TrainConfig& cfg) {
  EpochStats st;
  const std::size_t L = task.classes();
  const std::size_t group = std::max<std::size_t>(1, cfg.batch_samples / L);
  net.set_mode(NetMode::Eval);
  double loss_sum = 0, acc_sum = 0;
  std::size_t batches = 0, samples = 0;
  for (std::size_t at = 0; at < data.size(); at += group) {
    const std::size_t n = std::min(group, data.size() - at);
    std::vector<PointSeq> chunk(data.begin() + at, data.begin() + at + n);
    auto batch = gen_pretext_batch(task, chunk, cfg.render);
    const Tensor<float>& input = branch == Branch::Cnn ? batch.cnn : batch.tcn;
    auto out = net.forward(input);
    auto lr = softmax_xent(out, batch.labels);
    const std::size_t bs = batch.labels.size();
    loss_sum += static_cast<double>(lr.loss) * bs;
    acc_sum += accuracy(out, batch.labels) * bs;
    samples += bs;
    ++batches;
  }
  if (samples == 0) throw ValidationError("evaluation pass saw no samples");
  st.val_loss = loss_sum / static_cast<double>(samples);
  st.val_acc = acc_sum / static_cast<double>(samples);
  return st;
}

}  // namespace

TrainedModule train_module(const PretextTask& task, Branch branch,
                           const std::vector<PointSeq>& train_data,
                           const std::vector<PointSeq>& val_data, const ExtractorConfigs& nets,
                           const TrainConfig& cfg) {
  if (train_data.empty()) throw ValidationError("train_module: no training samples");
  if (val_data.empty()) throw ValidationError("train_module: no validation samples");
  if (cfg.epochs == 0) throw ValidationError("train_module: zero epochs");
  validate_render_config(cfg.render);
  if (cfg.render.side != 0 && branch == Branch::Cnn && cfg.render.side != nets.cnn.input_side) {
    throw ValidationError("render side " + std::to_string(cfg.render.side) +
                          " does not match cnn input side " +
                          std::to_string(nets.cnn.input_side));
  }

  TrainedModule tm;
  tm.net = build_branch(task, branch, nets);
  const std::uint64_t mseed = module_seed(cfg.seed, task, branch);
  tm.net.init_params(derive_seed(mseed, "init"));
  Rng shuffle_rng = make_rng(mseed, "shuffle");

  const OptimizerConfig& ocfg = branch == Branch::Cnn ? cfg.cnn_opt : cfg.tcn_opt;
  auto opt = make_optimizer<float>(ocfg.kind, ocfg.lr);

  const std::size_t L = task.classes();
  const std::size_t group = std::max<std::size_t>(1, cfg.batch_samples / L);

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  Snapshot best = take_snapshot(tm.net);
  tm.history.best_val_acc = -1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    tm.net.set_mode(NetMode::Train);
    double loss_sum = 0, acc_sum = 0;
    std::size_t samples = 0;
    for (std::size_t at = 0; at < order.size(); at += group) {
      const std::size_t n = std::min(group, order.size() - at);
      std::vector<PointSeq> chunk;
      chunk.reserve(n);
      for (std::size_t i = 0; i < n; ++i) chunk.push_back(train_data[order[at + i]]);
      auto batch = gen_pretext_batch(task, chunk, cfg.render);
      const Tensor<float>& input = branch == Branch::Cnn ? batch.cnn : batch.tcn;
      auto out = tm.net.forward(input);
      auto lr = softmax_xent(out, batch.labels);  // throws DivergenceError on NaN
      tm.net.zero_grads();
      tm.net.backward(lr.dlogits);
      opt->step(tm.net.params());
      const std::size_t bs = batch.labels.size();
      loss_sum += static_cast<double>(lr.loss) * bs;
      acc_sum += accuracy(out, batch.labels) * bs;
      samples += bs;
    }
    EpochStats st = eval_pass(tm.net, task, branch, val_data, cfg);
    st.train_loss = loss_sum / static_cast<double>(samples);
    st.train_acc = acc_sum / static_cast<double>(samples);
    tm.history.epochs.push_back(st);
    if (st.val_acc > tm.history.best_val_acc) {
      tm.history.best_val_acc = st.val_acc;
      tm.history.best_epoch = epoch;
      best = take_snapshot(tm.net);
    } else if (epoch - tm.history.best_epoch >= cfg.patience) {
      break;
    }
  }
  restore_snapshot(tm.net, best);
  tm.net.set_mode(NetMode::Eval);
  return tm;
}

ModuleBank init_bank(const std::vector<PretextTask>& tasks, const ExtractorConfigs& nets,
                     std::uint64_t seed) {
  if (tasks.empty()) throw ValidationError("init_bank: empty task list");
  std::size_t rotations = 0;
  for (const auto& t : tasks) rotations += t.kind == PretextTask::Kind::Rotation4;
  if (rotations != 1) {
    throw ValidationError("bank requires the rotation task exactly once");
  }
  ModuleBank bank;
  bank.feature_dim = nets.tcn.feature_dim;
  bank.seed = seed;
  auto build_module = [&](const PretextTask& task) {
    BankModule m;
    m.task = task;
    m.cnn = build_branch(task, Branch::Cnn, nets);
    m.cnn.init_params(derive_seed(module_seed(seed, task, Branch::Cnn), "init"));
    m.tcn = build_branch(task, Branch::Tcn, nets);
    m.tcn.init_params(derive_seed(module_seed(seed, task, Branch::Tcn), "init"));
    return m;
  };
  for (const auto& t : tasks) {
    if (t.kind == PretextTask::Kind::Rotation4) {
      bank.rotation = build_module(t);
    } else {
      bank.deforms.push_back(build_module(t));
    }
  }
  return bank;
}

ModuleBank train_bank(const std::vector<PretextTask>& tasks,
                      const std::vector<PointSeq>& train_data,
                      const std::vector<PointSeq>& val_data, const ExtractorConfigs& nets,
                      const TrainConfig& cfg) {
  ModuleBank bank = init_bank(tasks, nets, cfg.seed);
  auto train_one = [&](BankModule& m) {
    auto cnn = train_module(m.task, Branch::Cnn, train_data, val_data, nets, cfg);
    m.cnn = std::move(cnn.net);
    m.cnn_history = std::move(cnn.history);
    auto tcn = train_module(m.task, Branch::Tcn, train_data, val_data, nets, cfg);
    m.tcn = std::move(tcn.net);
    m.tcn_history = std::move(tcn.history);
  };
  train_one(bank.rotation);
  for (auto& m : bank.deforms) train_one(m);
  return bank;
}

void prepare_for_extraction(ModuleBank& bank) {
  auto prep = [](BankModule& m) {
    for (NetGraph<float>* net : {&m.cnn, &m.tcn}) {
      net->set_mode(NetMode::Eval);
      if (!net->head_detached()) net->detach_head();
    }
  };
  prep(bank.rotation);
  for (auto& m : bank.deforms) prep(m);
}

FusionWeights default_fusion(std::size_t j_modules) {
  FusionWeights w;
  const double u = 1.0 / static_cast<double>(j_modules + 1);
  w.lambda_r = u;
  w.lambda_d.assign(j_modules, u);
  w.mu_r = 0.5;
  w.mu_d.assign(j_modules, 0.5);
  return w;
}

void validate_fusion(const FusionWeights& w, std::size_t j_modules) {
  if (w.lambda_d.size() != j_modules || w.mu_d.size() != j_modules) {
    throw ValidationError("fusion weights sized for " + std::to_string(w.lambda_d.size()) +
                          " sub-modules, bank has " + std::to_string(j_modules));
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(w.lambda_r) || !finite(w.mu_r)) throw ValidationError("non-finite fusion weight");
  for (double v : w.lambda_d)
    if (!finite(v)) throw ValidationError("non-finite fusion weight");
  if (w.mu_r < 0.0 || w.mu_r > 1.0) throw ValidationError("mu_r outside [0,1]");
  for (double v : w.mu_d)
    if (v < 0.0 || v > 1.0) throw ValidationError("mu outside [0,1]");
}

FeatureVector fuse_module(const FeatureVector& cnn_feat, const FeatureVector& tcn_feat,
                          double mu) {
  if (cnn_feat.values.size() != tcn_feat.values.size()) {
    throw ValidationError("fuse_module: dim mismatch " +
                          std::to_string(cnn_feat.values.size()) + " vs " +
                          std::to_string(tcn_feat.values.size()));
  }
  if (!(mu >= 0.0 && mu <= 1.0)) throw ValidationError("mu outside [0,1]");
  FeatureVector out;
  out.source = "fused";
  out.module = cnn_feat.module;
  out.values.resize(cnn_feat.values.size());
  const float m = static_cast<float>(mu);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = m * cnn_feat.values[i] + (1.0f - m) * tcn_feat.values[i];
  }
  return out;
}

namespace {

// Fused branch features of one module for a sample batch: mu*cnn + (1-mu)*tcn.
Tensor<float> module_features(BankModule& m, double mu, const std::vector<PointSeq>& samples,
                              const RenderConfig& rcfg, std::size_t feature_dim) {
  const std::size_t N = samples.size();
  Tensor<float> cnn_in({N, 3, rcfg.side, rcfg.side});
  Tensor<float> tcn_in({N, 1, kSeqRows, kSeqCols});
  for (std::size_t i = 0; i < N; ++i) {
    put_cnn_row(cnn_in, i, tile_channels(render(samples[i], rcfg)));
    put_tcn_row(tcn_in, i, encode(samples[i]));
  }
  Tensor<float> fc = extract_batch(m.cnn, cnn_in);
  Tensor<float> ft = extract_batch(m.tcn, tcn_in);
  if (fc.shape != std::vector<std::size_t>({N, feature_dim}) || ft.shape != fc.shape) {
    throw ValidationError("module feature shapes disagree: " + shape_str(fc.shape) + " vs " +
                          shape_str(ft.shape));
  }
  const float mf = static_cast<float>(mu);
  Tensor<float> fused({N, feature_dim});
  for (std::size_t i = 0; i < fused.numel(); ++i) {
    fused.data[i] = mf * fc.data[i] + (1.0f - mf) * ft.data[i];
  }
  return fused;
}

}  // namespace

Tensor<float> fuse_bank_features(ModuleBank& bank, const FusionWeights& w,
                                 const std::vector<PointSeq>& samples,
                                 const RenderConfig& rcfg) {
  validate_fusion(w, bank.deforms.size());
  if (samples.empty()) throw ValidationError("fuse_bank_features: no samples");
  const std::size_t N = samples.size(), F = bank.feature_dim;
  Tensor<float> out({N, F});
  auto acc = [&](Tensor<float>&& feats, double lambda) {
    const float lf = static_cast<float>(lambda);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += lf * feats.data[i];
  };
  acc(module_features(bank.rotation, w.mu_r, samples, rcfg, F), w.lambda_r);
  for (std::size_t j = 0; j < bank.deforms.size(); ++j) {
    acc(module_features(bank.deforms[j], w.mu_d[j], samples, rcfg, F), w.lambda_d[j]);
  }
  return out;
}

FeatureVector fuse_bank(ModuleBank& bank, const FusionWeights& w, const PointSeq& seq,
                        const RenderConfig& rcfg) {
  Tensor<float> f = fuse_bank_features(bank, w, {seq}, rcfg);
  FeatureVector out;
  out.source = "fused";
  out.module = "bank";
  out.values.assign(f.data.begin(), f.data.end());
  return out;
}

namespace {

json spec_to_json(const DeformSpec& spec) {
  auto chain = [](const std::vector<AxisDeform>& c) {
    json arr = json::array();
    for (const auto& a : c) arr.push_back({{"a", a.a}, {"b", a.b}, {"eta", a.eta}});
    return arr;
  };
  return {{"name", spec.name}, {"x_axis", chain(spec.x_axis)}, {"y_axis", chain(spec.y_axis)}};
}

DeformSpec spec_from_json(const json& j) {
  DeformSpec spec;
  spec.name = j.at("name").get<std::string>();
  auto chain = [](const json& arr) {
    std::vector<AxisDeform> c;
    for (const auto& a : arr) {
      c.push_back(AxisDeform(a.at("a").get<double>(), a.at("b").get<double>(),
                             a.at("eta").get<double>()));
    }
    return c;
  };
  spec.x_axis = chain(j.at("x_axis"));
  spec.y_axis = chain(j.at("y_axis"));
  return spec;
}

json history_to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc}});
  }
  return {{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"best_val_acc", h.best_val_acc}};
}

TrainHistory history_from_json(const json& j) {
  TrainHistory h;
  for (const auto& e : j.at("epochs")) {
    h.epochs.push_back({e.at("train_loss").get<double>(), e.at("train_acc").get<double>(),
                        e.at("val_loss").get<double>(), e.at("val_acc").get<double>()});
  }
  h.best_epoch = j.at("best_epoch").get<std::size_t>();
  h.best_val_acc = j.at("best_val_acc").get<double>();
  return h;
}

}  // namespace

void save_bank(ModuleBank& bank, const FusionWeights& w, std::uint64_t config_hash,
               const std::filesystem::path& dir) {
  validate_fusion(w, bank.deforms.size());
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["seed"] = bank.seed;
  manifest["config_hash"] = config_hash;
  manifest["feature_dim"] = bank.feature_dim;
  manifest["fusion"] = {{"lambda_r", w.lambda_r},
                        {"lambda_d", w.lambda_d},
                        {"mu_r", w.mu_r},
                        {"mu_d", w.mu_d}};
  json modules = json::array();
  auto save_module = [&](BankModule& m) {
    json mj;
    mj["task"] = m.task.tag();
    if (m.task.kind == PretextTask::Kind::DeformBinary) mj["spec"] = spec_to_json(m.task.spec);
    mj["cnn_file"] = m.task.tag() + ".cnn.skck";
    mj["tcn_file"] = m.task.tag() + ".tcn.skck";
    mj["cnn_history"] = history_to_json(m.cnn_history);
    mj["tcn_history"] = history_to_json(m.tcn_history);
    for (Branch br : {Branch::Cnn, Branch::Tcn}) {
      CheckpointMeta meta;
      meta.config_hash = config_hash;
      meta.seed = module_seed(bank.seed, m.task, br);
      meta.branch = branch_name(br);
      meta.task = m.task.tag();
      NetGraph<float>& net = br == Branch::Cnn ? m.cnn : m.tcn;
      save_checkpoint(net, static_cast<const Optimizer<float>*>(nullptr), meta,
                      dir / (m.task.tag() + "." + branch_name(br) + ".skck"));
    }
    modules.push_back(std::move(mj));
  };
  save_module(bank.rotation);
  for (auto& m : bank.deforms) save_module(m);
  manifest["modules"] = std::move(modules);
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os) throw DataError("cannot write bank manifest in " + dir.string());
  os << manifest.dump(2) << "\n";
}

ModuleBank load_bank(const std::filesystem::path& dir, FusionWeights* weights_out,
                     std::uint64_t* config_hash_out) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw DataError("no bank manifest in " + dir.string());
  json manifest = json::parse(is, nullptr, false);
  if (manifest.is_discarded()) throw DataError("malformed bank manifest in " + dir.string());

  ModuleBank bank;
  bank.seed = manifest.at("seed").get<std::uint64_t>();
  bank.feature_dim = manifest.at("feature_dim").get<std::size_t>();
  const auto config_hash = manifest.at("config_hash").get<std::uint64_t>();
  if (config_hash_out) *config_hash_out = config_hash;

  bool rotation_seen = false;
  for (const auto& mj : manifest.at("modules")) {
    BankModule m;
    const std::string tag = mj.at("task").get<std::string>();
    if (tag == "R") {
      m.task = rotation_task();
    } else {
      m.task = deform_task(spec_from_json(mj.at("spec")));
    }
    m.cnn = load_checkpoint<float>(dir / mj.at("cnn_file").get<std::string>());
    m.tcn = load_checkpoint<float>(dir / mj.at("tcn_file").get<std::string>());
    m.cnn_history = history_from_json(mj.at("cnn_history"));
    m.tcn_history = history_from_json(mj.at("tcn_history"));
    if (tag == "R") {
      bank.rotation = std::move(m);
      rotation_seen = true;
    } else {
      bank.deforms.push_back(std::move(m));
    }
  }
  if (!rotation_seen) throw DataError("bank manifest lacks the rotation module");

  if (weights_out) {
    const auto& fj = manifest.at("fusion");
    weights_out->lambda_r = fj.at("lambda_r").get<double>();
    weights_out->lambda_d = fj.at("lambda_d").get<std::vector<double>>();
    weights_out->mu_r = fj.at("mu_r").get<double>();
    weights_out->mu_d = fj.at("mu_d").get<std::vector<double>>();
  }
  return bank;
}

}  // namespace skssl
