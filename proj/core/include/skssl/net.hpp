#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "skssl/layers.hpp"

namespace skssl {

enum class NetMode { Train, Eval };

// Ordered layer chain with a marked feature boundary. Layers before the
// boundary form the trunk (the representation); layers after it form the
// pretext classifier head, which extraction requires to be detached.
template <typename T>
class NetGraph {
 public:
  NetGraph() = default;
  NetGraph(NetGraph&&) = default;
  NetGraph& operator=(NetGraph&&) = default;

  void add(LayerPtr<T> layer);
  // Marks the current end of the chain as the feature output.
  void mark_feature_boundary();
  // Restores a boundary at an explicit index (checkpoint loading).
  void set_feature_index(std::size_t idx);
  std::size_t feature_index() const { return feature_index_; }
  bool has_feature_boundary() const { return feature_index_ != kNoBoundary; }

  void set_input_shape(std::vector<std::size_t> shape_sans_batch);
  const std::vector<std::size_t>& input_shape() const { return input_shape_; }

  // Validates the whole shape chain for a batch of `n` and returns the output
  // shape. Throws ValidationError naming the offending layer.
  std::vector<std::size_t> check_shapes(std::size_t n) const;
  std::vector<std::size_t> feature_shape(std::size_t n) const;

  // Draws fresh parameters, layer by layer in chain order.
  void init_params(std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x);
  // Runs the trunk only. Requires a marked boundary.
  Tensor<T> forward_feature(const Tensor<T>& x);
  // Propagates dL/d(last forward output); accumulates parameter gradients and
  // returns the input gradient. StateError if no forward preceded it.
  Tensor<T> backward(const Tensor<T>& dout);

  void set_mode(NetMode m) { mode_ = m; }
  NetMode mode() const { return mode_; }

  // Permanently drops the head layers. StateError without a boundary.
  void detach_head();
  bool head_detached() const { return head_detached_; }

  std::vector<ParamRef<T>> params();
  std::vector<BufferRef<T>> buffers();
  void zero_grads();
  std::size_t param_count();

  const std::vector<LayerPtr<T>>& layers() const { return layers_; }
  std::vector<LayerPtr<T>>& layers_mut() { return layers_; }

 private:
  static constexpr std::size_t kNoBoundary = static_cast<std::size_t>(-1);
  std::vector<LayerPtr<T>> layers_;
  std::vector<std::size_t> input_shape_;
  std::size_t feature_index_ = kNoBoundary;
  NetMode mode_ = NetMode::Train;
  bool head_detached_ = false;
  std::size_t last_forward_len_ = 0;  // layers executed by the last forward
  bool forward_done_ = false;
};

}  // namespace skssl
