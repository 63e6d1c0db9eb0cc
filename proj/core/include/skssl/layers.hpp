#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "skssl/rng.hpp"
#include "skssl/tensor.hpp"

namespace skssl {

// Named view over one parameter tensor and its gradient. `kind` is the owning
// layer's kind, used to attribute gradient-check errors.
template <typename T>
struct ParamRef {
  std::string name;
  std::string kind;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

// Non-trainable state that must persist in checkpoints (running statistics).
template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* value = nullptr;
};

// Stateful differentiable layer. forward caches what backward needs; backward
// consumes the cache, accumulates parameter gradients, and returns the input
// gradient. All tensors carry a leading batch dimension.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  // Output shape (with batch dim) for a given input shape; validates.
  virtual std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {}
  virtual void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {}
  virtual void collect_kinds(std::vector<std::string>& out) const { out.push_back(kind()); }
  virtual void init_params(Rng& rng) {}
  virtual void zero_grads() {}
};

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

// 1D valid cross-correlation. Input [N,C,L], weight [OC,C,K], output
// [N,OC,(L-K)/stride+1].
template <typename T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride = 1);
  std::string kind() const override { return "conv1d"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grads() override;

  std::size_t in_ch, out_ch, k, stride;
  Tensor<T> w, b, dw, db;

 private:
  Tensor<T> x_;
};

// 2D cross-correlation with optional symmetric zero padding (0 = valid).
// Input [N,C,H,W], weight [OC,C,KH,KW].
template <typename T>
class Conv2d : public Layer<T> {
 public:
  Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
         std::size_t stride = 1, std::size_t pad = 0);
  std::string kind() const override { return "conv2d"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grads() override;

  std::size_t in_ch, out_ch, kh, kw, stride, pad;
  Tensor<T> w, b, dw, db;

 private:
  Tensor<T> xpad_;  // padded input cache
};

// y = x W^T + b. Input [N,D], weight [M,D].
template <typename T>
class FullyConnected : public Layer<T> {
 public:
  FullyConnected(std::size_t in_dim, std::size_t out_dim);
  std::string kind() const override { return "fully_connected"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grads() override;

  std::size_t in_dim, out_dim;
  Tensor<T> w, b, dw, db;

 private:
  Tensor<T> x_;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;

 private:
  Tensor<T> y_;
};

// Feature-wise batch normalization over [N,D]. Running stats use momentum
// 0.9 (new = 0.9*old + 0.1*batch) with biased batch variance; eps 1e-5.
template <typename T>
class BatchNorm : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t dim);
  std::string kind() const override { return "batch_norm"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grads() override;

  std::size_t dim;
  T momentum = T(0.9);
  T eps = T(1e-5);
  Tensor<T> gamma, beta, dgamma, dbeta;
  Tensor<T> running_mean, running_var;

 private:
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool train_cache_ = true;
};

// Non-overlapping 2D max pooling, kernel = stride. Spatial dims must divide.
template <typename T>
class MaxPool2d : public Layer<T> {
 public:
  explicit MaxPool2d(std::size_t k);
  std::string kind() const override { return "max_pool"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;

  std::size_t k;

 private:
  std::vector<std::size_t> in_shape_;
  std::vector<std::size_t> argmax_;
};

// Max over all trailing spatial dims: [N,C,L] or [N,C,H,W] -> [N,C].
template <typename T>
class GlobalMaxPool : public Layer<T> {
 public:
  std::string kind() const override { return "global_max_pool"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;

 private:
  std::vector<std::size_t> in_shape_;
  std::vector<std::size_t> argmax_;
};

// [N,...] -> [N,prod].
template <typename T>
class Flatten : public Layer<T> {
 public:
  std::string kind() const override { return "flatten"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;

 private:
  std::vector<std::size_t> in_shape_;
};

// [N,D] -> [N,1,D]: re-read a concatenated vector as a 1-channel sequence.
template <typename T>
class AsSequence : public Layer<T> {
 public:
  std::string kind() const override { return "as_sequence"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
};

// Runs each branch (a layer chain ending in [N,D_b]) on the shared input and
// concatenates branch outputs along dim 1. Input gradient is the sum of
// branch input gradients.
template <typename T>
class ParallelConcat : public Layer<T> {
 public:
  explicit ParallelConcat(std::vector<std::vector<LayerPtr<T>>> branches);
  std::string kind() const override { return "parallel_concat"; }
  std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) const override;
  Tensor<T> forward(const Tensor<T>& x, bool train) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) override;
  void collect_kinds(std::vector<std::string>& out) const override;
  void init_params(Rng& rng) override;
  void zero_grads() override;

  const std::vector<std::vector<LayerPtr<T>>>& branches() const { return branches_; }

 private:
  std::vector<std::vector<LayerPtr<T>>> branches_;
  std::vector<std::size_t> widths_;  // last forward's per-branch output widths
};

// Xavier-uniform bound for a weight tensor.
double xavier_limit(std::size_t fan_in, std::size_t fan_out);

}  // namespace skssl
