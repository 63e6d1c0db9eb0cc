#include "skssl/extractors.hpp"

#include <cmath>

namespace skssl {

std::vector<std::size_t> TcnConfig::scaled_channels() const {
  std::vector<std::size_t> out;
  out.reserve(layer_channels.size());
  for (auto c : layer_channels) {
    const auto scaled = static_cast<std::size_t>(
        std::lround(static_cast<double>(c) * width_multiplier));
    out.push_back(scaled > 0 ? scaled : 1);
  }
  return out;
}

std::vector<std::size_t> TcnConfig::stage_widths() const {
  std::vector<std::size_t> out;
  for (auto c : scaled_channels()) out.push_back(c * kernel_sizes.size());
  return out;
}

void validate_tcn_config(const TcnConfig& cfg) {
  if (cfg.layer_channels.size() != 4) {
    throw ValidationError("tcn: expected 4 convolution stages, got " +
                          std::to_string(cfg.layer_channels.size()));
  }
  if (cfg.kernel_sizes.empty()) throw ValidationError("tcn: no kernel sizes");
  for (std::size_t i = 0; i < cfg.kernel_sizes.size(); ++i) {
    if (cfg.kernel_sizes[i] == 0) throw ValidationError("tcn: zero kernel size");
    if (i && cfg.kernel_sizes[i] <= cfg.kernel_sizes[i - 1]) {
      throw ValidationError("tcn: kernel sizes must be strictly increasing");
    }
  }
  if (cfg.feature_dim == 0) throw ValidationError("tcn: feature_dim must be positive");
  if (!(cfg.width_multiplier > 0.0)) {
    throw ValidationError("tcn: width multiplier must be positive");
  }
  if (cfg.seq_len == 0 || cfg.in_cols == 0) throw ValidationError("tcn: empty input shape");
  const auto kmax = cfg.kernel_sizes.back();
  std::size_t stage_input = cfg.seq_len;
  const auto widths = cfg.stage_widths();
  for (std::size_t s = 0; s < 4; ++s) {
    if (kmax > stage_input) {
      throw ValidationError("tcn: kernel " + std::to_string(kmax) + " exceeds stage " +
                            std::to_string(s + 1) + " input length " +
                            std::to_string(stage_input));
    }
    stage_input = widths[s];
  }
}

void validate_cnn_config(const CnnConfig& cfg) {
  if (cfg.block_channels.empty()) throw ValidationError("cnn: no blocks");
  if (cfg.input_side < 2) throw ValidationError("cnn: input side too small");
  if (cfg.in_channels == 0) throw ValidationError("cnn: no input channels");
  if (cfg.feature_dim == 0) throw ValidationError("cnn: feature_dim must be positive");
  std::size_t side = cfg.input_side;
  for (std::size_t b = 0; b < cfg.block_channels.size(); ++b) {
    if (cfg.block_channels[b] == 0) throw ValidationError("cnn: zero channel count");
    if (side % 2 != 0) {
      throw ValidationError("cnn: side " + std::to_string(side) +
                            " not divisible by pooling at block " + std::to_string(b + 1));
    }
    side /= 2;
  }
  if (side == 0) throw ValidationError("cnn: pooling chain exhausts the raster");
}

namespace {

template <typename T>
NetGraph<T> build_tcn_impl(const TcnConfig& cfg, std::size_t classes) {
  validate_tcn_config(cfg);
  if (classes < 2) throw ValidationError("tcn: classifier needs at least 2 classes");
  const auto channels = cfg.scaled_channels();
  const auto widths = cfg.stage_widths();

  NetGraph<T> net;
  net.set_input_shape({1, cfg.seq_len, cfg.in_cols});

  // Stage 1: 2D kernels spanning all input columns.
  {
    std::vector<std::vector<LayerPtr<T>>> branches;
    for (auto k : cfg.kernel_sizes) {
      std::vector<LayerPtr<T>> br;
      br.push_back(std::make_unique<Conv2d<T>>(1, channels[0], k, cfg.in_cols));
      br.push_back(std::make_unique<ReLU<T>>());
      br.push_back(std::make_unique<GlobalMaxPool<T>>());
      branches.push_back(std::move(br));
    }
    net.add(std::make_unique<ParallelConcat<T>>(std::move(branches)));
  }

  // Stages 2-4: 1D kernels over the previous concatenation.
  for (std::size_t s = 1; s < 4; ++s) {
    net.add(std::make_unique<AsSequence<T>>());
    std::vector<std::vector<LayerPtr<T>>> branches;
    for (auto k : cfg.kernel_sizes) {
      std::vector<LayerPtr<T>> br;
      br.push_back(std::make_unique<Conv1d<T>>(1, channels[s], k));
      br.push_back(std::make_unique<ReLU<T>>());
      br.push_back(std::make_unique<GlobalMaxPool<T>>());
      branches.push_back(std::move(br));
    }
    net.add(std::make_unique<ParallelConcat<T>>(std::move(branches)));
  }

  net.add(std::make_unique<FullyConnected<T>>(widths[3], cfg.feature_dim));
  net.mark_feature_boundary();
  net.add(std::make_unique<BatchNorm<T>>(cfg.feature_dim));
  net.add(std::make_unique<ReLU<T>>());
  net.add(std::make_unique<FullyConnected<T>>(cfg.feature_dim, classes));
  net.check_shapes(1);
  return net;
}

template <typename T>
NetGraph<T> build_cnn_impl(const CnnConfig& cfg, std::size_t classes) {
  validate_cnn_config(cfg);
  if (classes < 2) throw ValidationError("cnn: classifier needs at least 2 classes");
  NetGraph<T> net;
  net.set_input_shape({cfg.in_channels, cfg.input_side, cfg.input_side});
  std::size_t ch = cfg.in_channels;
  std::size_t side = cfg.input_side;
  for (auto c : cfg.block_channels) {
    net.add(std::make_unique<Conv2d<T>>(ch, c, 3, 3, 1, 1));
    net.add(std::make_unique<ReLU<T>>());
    net.add(std::make_unique<MaxPool2d<T>>(2));
    ch = c;
    side /= 2;
  }
  net.add(std::make_unique<Flatten<T>>());
  net.add(std::make_unique<FullyConnected<T>>(ch * side * side, cfg.feature_dim));
  net.mark_feature_boundary();
  net.add(std::make_unique<BatchNorm<T>>(cfg.feature_dim));
  net.add(std::make_unique<ReLU<T>>());
  net.add(std::make_unique<FullyConnected<T>>(cfg.feature_dim, classes));
  net.check_shapes(1);
  return net;
}

}  // namespace

NetGraph<float> build_tcn(const TcnConfig& cfg, std::size_t classes) {
  return build_tcn_impl<float>(cfg, classes);
}

NetGraph<float> build_cnn(const CnnConfig& cfg, std::size_t classes) {
  return build_cnn_impl<float>(cfg, classes);
}

NetGraph<double> build_tcn_f64(const TcnConfig& cfg, std::size_t classes) {
  return build_tcn_impl<double>(cfg, classes);
}

NetGraph<double> build_cnn_f64(const CnnConfig& cfg, std::size_t classes) {
  return build_cnn_impl<double>(cfg, classes);
}

Tensor<float> extract_batch(NetGraph<float>& net, const Tensor<float>& inputs) {
  if (net.mode() != NetMode::Eval) {
    throw StateError("extraction requires eval mode");
  }
  if (!net.head_detached()) {
    throw StateError("extraction requires the classifier head to be detached");
  }
  Tensor<float> f = net.forward_feature(inputs);
  check_finite(f, "extracted features");
  return f;
}

FeatureVector extract(NetGraph<float>& net, const Tensor<float>& input) {
  if (input.rank() < 2 || input.shape[0] != 1) {
    throw ValidationError("extract expects a single sample with batch dim 1, got " +
                          shape_str(input.shape));
  }
  Tensor<float> f = extract_batch(net, input);
  FeatureVector out;
  out.values.assign(f.data.begin(), f.data.end());
  return out;
}

}  // namespace skssl
