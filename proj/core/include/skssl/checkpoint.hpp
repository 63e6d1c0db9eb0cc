#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "skssl/net.hpp"
#include "skssl/optim.hpp"

namespace skssl {

inline constexpr char kCkptMagic[4] = {'S', 'K', 'C', 'K'};
inline constexpr std::uint32_t kCkptVersion = 1;

struct CheckpointMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string optimizer_kind;  // empty when no optimizer state is stored
  double optimizer_lr = 0.0;
  std::int64_t optimizer_step = 0;
  std::string branch;  // "cnn" | "tcn" | free-form tag
  std::string task;    // pretext task tag
};

// Writes architecture, parameters, running buffers, and (when given) the
// optimizer's state tensors under an "opt." prefix.
template <typename T>
void save_checkpoint(NetGraph<T>& net, const Optimizer<T>* opt, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

// Rebuilds the graph from the stored architecture and loads every tensor.
// Refuses a config-hash mismatch with `expected_hash` unless `force`.
template <typename T>
NetGraph<T> load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta_out = nullptr,
                            std::optional<std::uint64_t> expected_hash = std::nullopt,
                            bool force = false);

// Loads parameters/buffers into an existing graph; every stored tensor must
// match a graph tensor by name and shape, else ValidationError.
template <typename T>
void load_params_into(NetGraph<T>& net, const std::filesystem::path& path);

// Restores optimizer state saved alongside the parameters. The optimizer kind
// must match the stored one.
template <typename T>
void load_optimizer_state(Optimizer<T>& opt, const std::filesystem::path& path);

}  // namespace skssl
