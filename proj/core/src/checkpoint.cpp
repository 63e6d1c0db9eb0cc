#include "skssl/checkpoint.hpp"

#include <map>
#include <type_traits>

#include <json.hpp>

#include "skssl/binio.hpp"

namespace skssl {
namespace {

using nlohmann::json;

template <typename T>
json arch_of_layer(const Layer<T>& l);

template <typename T>
json arch_of_chain(const std::vector<LayerPtr<T>>& chain) {
  json arr = json::array();
  for (const auto& l : chain) arr.push_back(arch_of_layer(*l));
  return arr;
}

template <typename T>
json arch_of_layer(const Layer<T>& l) {
  json j;
  j["kind"] = l.kind();
  if (auto* c = dynamic_cast<const Conv1d<T>*>(&l)) {
    j["in"] = c->in_ch;
    j["out"] = c->out_ch;
    j["k"] = c->k;
    j["stride"] = c->stride;
  } else if (auto* c2 = dynamic_cast<const Conv2d<T>*>(&l)) {
    j["in"] = c2->in_ch;
    j["out"] = c2->out_ch;
    j["kh"] = c2->kh;
    j["kw"] = c2->kw;
    j["stride"] = c2->stride;
    j["pad"] = c2->pad;
  } else if (auto* f = dynamic_cast<const FullyConnected<T>*>(&l)) {
    j["in"] = f->in_dim;
    j["out"] = f->out_dim;
  } else if (auto* bn = dynamic_cast<const BatchNorm<T>*>(&l)) {
    j["dim"] = bn->dim;
  } else if (auto* mp = dynamic_cast<const MaxPool2d<T>*>(&l)) {
    j["k"] = mp->k;
  } else if (auto* pc = dynamic_cast<const ParallelConcat<T>*>(&l)) {
    json branches = json::array();
    for (const auto& br : pc->branches()) branches.push_back(arch_of_chain<T>(br));
    j["branches"] = std::move(branches);
  } else if (l.kind() != "relu" && l.kind() != "global_max_pool" && l.kind() != "flatten" &&
             l.kind() != "as_sequence") {
    throw StateError("cannot serialize layer kind '" + l.kind() + "'");
  }
  return j;
}

template <typename T>
LayerPtr<T> layer_from_arch(const json& j);

template <typename T>
std::vector<LayerPtr<T>> chain_from_arch(const json& arr) {
  std::vector<LayerPtr<T>> chain;
  for (const auto& lj : arr) chain.push_back(layer_from_arch<T>(lj));
  return chain;
}

template <typename T>
LayerPtr<T> layer_from_arch(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv1d") {
    return std::make_unique<Conv1d<T>>(j.at("in").get<std::size_t>(),
                                       j.at("out").get<std::size_t>(),
                                       j.at("k").get<std::size_t>(),
                                       j.at("stride").get<std::size_t>());
  }
  if (kind == "conv2d") {
    return std::make_unique<Conv2d<T>>(j.at("in").get<std::size_t>(),
                                       j.at("out").get<std::size_t>(),
                                       j.at("kh").get<std::size_t>(),
                                       j.at("kw").get<std::size_t>(),
                                       j.at("stride").get<std::size_t>(),
                                       j.at("pad").get<std::size_t>());
  }
  if (kind == "fully_connected") {
    return std::make_unique<FullyConnected<T>>(j.at("in").get<std::size_t>(),
                                               j.at("out").get<std::size_t>());
  }
  if (kind == "relu") return std::make_unique<ReLU<T>>();
  if (kind == "batch_norm") return std::make_unique<BatchNorm<T>>(j.at("dim").get<std::size_t>());
  if (kind == "max_pool") return std::make_unique<MaxPool2d<T>>(j.at("k").get<std::size_t>());
  if (kind == "global_max_pool") return std::make_unique<GlobalMaxPool<T>>();
  if (kind == "flatten") return std::make_unique<Flatten<T>>();
  if (kind == "as_sequence") return std::make_unique<AsSequence<T>>();
  if (kind == "parallel_concat") {
    std::vector<std::vector<LayerPtr<T>>> branches;
    for (const auto& bj : j.at("branches")) branches.push_back(chain_from_arch<T>(bj));
    return std::make_unique<ParallelConcat<T>>(std::move(branches));
  }
  throw DataError("checkpoint names unknown layer kind '" + kind + "'");
}

template <typename T>
constexpr std::uint8_t dtype_code() {
  return std::is_same_v<T, float> ? 0 : 1;
}

template <typename T>
void write_entry(std::ostream& os, const std::string& name, const Tensor<T>& t) {
  write_str(os, name);
  write_le<std::uint8_t>(os, dtype_code<T>());
  write_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape) write_le<std::uint64_t>(os, d);
  write_le_array(os, t.ptr(), t.numel());
}

template <typename T>
std::pair<std::string, Tensor<T>> read_entry(std::istream& is) {
  std::string name = read_str(is, "entry name");
  const auto dt = read_le<std::uint8_t>(is, "entry dtype");
  if (dt != dtype_code<T>()) {
    throw DataError("checkpoint entry '" + name + "' has dtype code " + std::to_string(dt) +
                    ", expected " + std::to_string(dtype_code<T>()));
  }
  const auto rank = read_le<std::uint8_t>(is, "entry rank");
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) d = read_le<std::uint64_t>(is, "entry dim");
  Tensor<T> t(shape);
  read_le_array(is, t.ptr(), t.numel(), name.c_str());
  return {std::move(name), std::move(t)};
}

struct RawCheckpoint {
  json arch;
  json meta;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

template <typename T>
RawCheckpoint read_header_and_entries(std::istream& is,
                                      std::map<std::string, Tensor<T>>& entries) {
  expect_magic(is, kCkptMagic, "checkpoint");
  const auto version = read_le<std::uint32_t>(is, "checkpoint version");
  if (version != kCkptVersion) {
    throw DataError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                    std::to_string(kCkptVersion) + ")");
  }
  RawCheckpoint raw;
  raw.config_hash = read_le<std::uint64_t>(is, "config hash");
  raw.seed = read_le<std::uint64_t>(is, "seed");
  const std::string arch_s = read_str32(is, "architecture");
  const std::string meta_s = read_str32(is, "metadata");
  raw.arch = json::parse(arch_s, nullptr, false);
  raw.meta = json::parse(meta_s, nullptr, false);
  if (raw.arch.is_discarded() || raw.meta.is_discarded()) {
    throw DataError("checkpoint carries malformed JSON header");
  }
  const auto n = read_le<std::uint32_t>(is, "entry count");
  for (std::uint32_t i = 0; i < n; ++i) {
    auto [name, t] = read_entry<T>(is);
    if (!entries.emplace(std::move(name), std::move(t)).second) {
      throw DataError("duplicate checkpoint entry");
    }
  }
  return raw;
}

json meta_to_json(const CheckpointMeta& m) {
  return json{{"optimizer", m.optimizer_kind}, {"lr", m.optimizer_lr},
              {"step", m.optimizer_step},     {"branch", m.branch},
              {"task", m.task}};
}

CheckpointMeta meta_from_json(const json& j, std::uint64_t hash, std::uint64_t seed) {
  CheckpointMeta m;
  m.config_hash = hash;
  m.seed = seed;
  m.optimizer_kind = j.value("optimizer", "");
  m.optimizer_lr = j.value("lr", 0.0);
  m.optimizer_step = j.value("step", std::int64_t{0});
  m.branch = j.value("branch", "");
  m.task = j.value("task", "");
  return m;
}

}  // namespace

template <typename T>
void save_checkpoint(NetGraph<T>& net, const Optimizer<T>* opt, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  json arch;
  arch["dtype"] = dtype_code<T>() == 0 ? "f32" : "f64";
  arch["input_shape"] = net.input_shape();
  arch["feature_index"] = net.has_feature_boundary() ? net.feature_index() : 0;
  arch["head_detached"] = net.head_detached();
  arch["layers"] = arch_of_chain<T>(net.layers());

  json mj = meta_to_json(meta);
  if (opt) {
    mj["optimizer"] = opt->kind();
    mj["lr"] = opt->learning_rate();
    mj["step"] = opt->step_count();
  }

  auto params = net.params();
  auto bufs = net.buffers();
  std::map<std::string, Tensor<T>> opt_state;
  if (opt) opt_state = opt->state();

  auto os = open_out(path.string());
  os.write(kCkptMagic, 4);
  write_le<std::uint32_t>(os, kCkptVersion);
  write_le<std::uint64_t>(os, meta.config_hash);
  write_le<std::uint64_t>(os, meta.seed);
  write_str32(os, arch.dump());
  write_str32(os, mj.dump());
  write_le<std::uint32_t>(
      os, static_cast<std::uint32_t>(params.size() + bufs.size() + opt_state.size()));
  for (const auto& p : params) write_entry(os, p.name, *p.value);
  for (const auto& b : bufs) write_entry(os, b.name, *b.value);
  for (const auto& [name, t] : opt_state) write_entry(os, "opt." + name, t);
  if (!os) throw DataError("write failed: " + path.string());
}

template <typename T>
NetGraph<T> load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta_out,
                            std::optional<std::uint64_t> expected_hash, bool force) {
  auto is = open_in(path.string());
  std::map<std::string, Tensor<T>> entries;
  RawCheckpoint raw = read_header_and_entries<T>(is, entries);
  if (expected_hash && raw.config_hash != *expected_hash && !force) {
    throw DataError("checkpoint config hash mismatch: stored " + std::to_string(raw.config_hash) +
                    ", expected " + std::to_string(*expected_hash) + " (use force to override)");
  }
  const std::string want_dtype = dtype_code<T>() == 0 ? "f32" : "f64";
  if (raw.arch.at("dtype").get<std::string>() != want_dtype) {
    throw DataError("checkpoint dtype " + raw.arch.at("dtype").get<std::string>() +
                    " does not match requested " + want_dtype);
  }

  NetGraph<T> net;
  net.set_input_shape(raw.arch.at("input_shape").get<std::vector<std::size_t>>());
  for (const auto& lj : raw.arch.at("layers")) net.add(layer_from_arch<T>(lj));
  const auto fi = raw.arch.at("feature_index").get<std::size_t>();
  if (fi > 0) {
    if (fi > net.layers().size()) throw DataError("checkpoint feature index out of range");
    net.set_feature_index(fi);
  }

  for (const auto& p : net.params()) {
    auto it = entries.find(p.name);
    if (it == entries.end()) throw DataError("checkpoint missing parameter " + p.name);
    if (it->second.shape != p.value->shape) {
      throw ValidationError("checkpoint parameter " + p.name + " has shape " +
                            shape_str(it->second.shape) + ", graph expects " +
                            shape_str(p.value->shape));
    }
    *p.value = it->second;
  }
  for (const auto& b : net.buffers()) {
    auto it = entries.find(b.name);
    if (it == entries.end()) throw DataError("checkpoint missing buffer " + b.name);
    if (it->second.shape != b.value->shape) {
      throw ValidationError("checkpoint buffer " + b.name + " shape mismatch");
    }
    *b.value = it->second;
  }
  // A post-detach save stores the trunk only; boundary sits at the chain end.
  if (raw.arch.value("head_detached", false)) net.detach_head();
  if (meta_out) *meta_out = meta_from_json(raw.meta, raw.config_hash, raw.seed);
  net.set_mode(NetMode::Eval);
  return net;
}

template <typename T>
void load_params_into(NetGraph<T>& net, const std::filesystem::path& path) {
  auto is = open_in(path.string());
  std::map<std::string, Tensor<T>> entries;
  read_header_and_entries<T>(is, entries);
  auto params = net.params();
  auto bufs = net.buffers();
  for (const auto& p : params) {
    auto it = entries.find(p.name);
    if (it == entries.end()) {
      throw ValidationError("checkpoint has no entry for graph parameter " + p.name);
    }
    if (it->second.shape != p.value->shape) {
      throw ValidationError("checkpoint parameter " + p.name + " has shape " +
                            shape_str(it->second.shape) + ", graph expects " +
                            shape_str(p.value->shape));
    }
  }
  for (const auto& b : bufs) {
    auto it = entries.find(b.name);
    if (it == entries.end()) {
      throw ValidationError("checkpoint has no entry for graph buffer " + b.name);
    }
    if (it->second.shape != b.value->shape) {
      throw ValidationError("checkpoint buffer " + b.name + " shape mismatch");
    }
  }
  for (const auto& p : params) *p.value = entries.at(p.name);
  for (const auto& b : bufs) *b.value = entries.at(b.name);
}

template <typename T>
void load_optimizer_state(Optimizer<T>& opt, const std::filesystem::path& path) {
  auto is = open_in(path.string());
  std::map<std::string, Tensor<T>> entries;
  RawCheckpoint raw = read_header_and_entries<T>(is, entries);
  const std::string stored = raw.meta.value("optimizer", "");
  if (stored != opt.kind()) {
    throw DataError("checkpoint stores optimizer '" + stored + "', not '" + opt.kind() + "'");
  }
  std::map<std::string, Tensor<T>> state;
  for (auto& [name, t] : entries) {
    if (name.rfind("opt.", 0) == 0) state.emplace(name.substr(4), std::move(t));
  }
  opt.load_state(state);
  opt.set_step_count(raw.meta.value("step", std::int64_t{0}));
}

template void save_checkpoint(NetGraph<float>&, const Optimizer<float>*, const CheckpointMeta&,
                              const std::filesystem::path&);
template void save_checkpoint(NetGraph<double>&, const Optimizer<double>*, const CheckpointMeta&,
                              const std::filesystem::path&);
template NetGraph<float> load_checkpoint(const std::filesystem::path&, CheckpointMeta*,
                                         std::optional<std::uint64_t>, bool);
template NetGraph<double> load_checkpoint(const std::filesystem::path&, CheckpointMeta*,
                                          std::optional<std::uint64_t>, bool);
template void load_params_into(NetGraph<float>&, const std::filesystem::path&);
template void load_params_into(NetGraph<double>&, const std::filesystem::path&);
template void load_optimizer_state(Optimizer<float>&, const std::filesystem::path&);
template void load_optimizer_state(Optimizer<double>&, const std::filesystem::path&);

}  // namespace skssl
