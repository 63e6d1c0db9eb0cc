#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skssl/net.hpp"
#include "skssl/stroke.hpp"

namespace skssl {

// Multi-kernel TCN. Four stages; each stage runs one (conv -> relu -> global
// max pool) branch per kernel size over a single-channel sequence and
// concatenates the pooled channels, and the concatenated vector feeds the
// next stage as a 1-channel sequence. Stage 1 sees the raw T x 4 encoding
// with 2D kernels of extent K x 4.
struct TcnConfig {
  std::vector<std::size_t> kernel_sizes = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::vector<std::size_t> layer_channels = {16, 32, 64, 128};
  std::size_t feature_dim = 256;
  double width_multiplier = 1.0;
  std::size_t seq_len = kSeqRows;
  std::size_t in_cols = kSeqCols;

  // Channel counts after the width multiplier.
  std::vector<std::size_t> scaled_channels() const;
  // Concatenated width after each stage.
  std::vector<std::size_t> stage_widths() const;
};

void validate_tcn_config(const TcnConfig& cfg);

// Convolutional pyramid over the tiled raster: per block conv(3x3, pad 1) ->
// relu -> maxpool(2), then flatten -> FC to feature_dim.
struct CnnConfig {
  std::size_t input_side = 64;
  std::size_t in_channels = 3;
  std::vector<std::size_t> block_channels = {8, 16, 32, 64};
  std::size_t feature_dim = 256;
};

void validate_cnn_config(const CnnConfig& cfg);

struct FeatureVector {
  std::vector<float> values;
  std::string source;  // "cnn" | "tcn" | "fused"
  std::string module;  // task tag, e.g. "rotation4" or "deform:HC"
};

// Builds trunk + pretext head (FC to feature, then BN -> ReLU -> FC to
// `classes`). The feature boundary sits after the first FC, so the extracted
// representation is the pre-BN feature.
NetGraph<float> build_tcn(const TcnConfig& cfg, std::size_t classes);
NetGraph<float> build_cnn(const CnnConfig& cfg, std::size_t classes);

// 64-bit twins for gradient checking.
NetGraph<double> build_tcn_f64(const TcnConfig& cfg, std::size_t classes);
NetGraph<double> build_cnn_f64(const CnnConfig& cfg, std::size_t classes);

// Single-sample feature. StateError unless the net is in eval mode with the
// head detached. Input carries a batch dim of 1.
FeatureVector extract(NetGraph<float>& net, const Tensor<float>& input);

// Batched features, [N, feature_dim].
Tensor<float> extract_batch(NetGraph<float>& net, const Tensor<float>& inputs);

}  // namespace skssl
