#include "skssl/net.hpp"

namespace skssl {

template <typename T>
void NetGraph<T>::add(LayerPtr<T> layer) {
  if (head_detached_) throw StateError("cannot add layers after detach_head");
  layers_.push_back(std::move(layer));
}

template <typename T>
void NetGraph<T>::mark_feature_boundary() {
  if (layers_.empty()) throw StateError("feature boundary on an empty graph");
  feature_index_ = layers_.size();
}

template <typename T>
void NetGraph<T>::set_feature_index(std::size_t idx) {
  if (idx == 0 || idx > layers_.size()) {
    throw ValidationError("feature index " + std::to_string(idx) + " outside chain of " +
                          std::to_string(layers_.size()) + " layers");
  }
  feature_index_ = idx;
}

template <typename T>
void NetGraph<T>::set_input_shape(std::vector<std::size_t> shape_sans_batch) {
  if (shape_sans_batch.empty()) throw ValidationError("empty input shape");
  input_shape_ = std::move(shape_sans_batch);
}

template <typename T>
std::vector<std::size_t> NetGraph<T>::check_shapes(std::size_t n) const {
  if (input_shape_.empty()) throw StateError("input shape not declared");
  std::vector<std::size_t> s;
  s.push_back(n);
  s.insert(s.end(), input_shape_.begin(), input_shape_.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = layers_[i]->out_shape(s);
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return s;
}

template <typename T>
std::vector<std::size_t> NetGraph<T>::feature_shape(std::size_t n) const {
  if (!has_feature_boundary()) throw StateError("no feature boundary marked");
  std::vector<std::size_t> s;
  s.push_back(n);
  s.insert(s.end(), input_shape_.begin(), input_shape_.end());
  for (std::size_t i = 0; i < feature_index_; ++i) {
    try {
      s = layers_[i]->out_shape(s);
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return s;
}

template <typename T>
void NetGraph<T>::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init_params(rng);
}

template <typename T>
Tensor<T> NetGraph<T>::forward(const Tensor<T>& x) {
  Tensor<T> h = x;
  const bool train = mode_ == NetMode::Train;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      h = layers_[i]->forward(h, train);
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  last_forward_len_ = layers_.size();
  forward_done_ = true;
  return h;
}

template <typename T>
Tensor<T> NetGraph<T>::forward_feature(const Tensor<T>& x) {
  if (!has_feature_boundary()) throw StateError("no feature boundary marked");
  Tensor<T> h = x;
  const bool train = mode_ == NetMode::Train;
  const std::size_t upto = head_detached_ ? layers_.size() : feature_index_;
  for (std::size_t i = 0; i < upto; ++i) {
    try {
      h = layers_[i]->forward(h, train);
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  last_forward_len_ = upto;
  forward_done_ = true;
  return h;
}

template <typename T>
Tensor<T> NetGraph<T>::backward(const Tensor<T>& dout) {
  if (!forward_done_) throw StateError("backward before forward");
  Tensor<T> d = dout;
  for (std::size_t i = last_forward_len_; i-- > 0;) {
    try {
      d = layers_[i]->backward(d);
    } catch (const ValidationError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return d;
}

template <typename T>
void NetGraph<T>::detach_head() {
  if (!has_feature_boundary()) throw StateError("no feature boundary marked");
  layers_.resize(feature_index_);
  head_detached_ = true;
  forward_done_ = false;
}

template <typename T>
std::vector<ParamRef<T>> NetGraph<T>::params() {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params("L" + std::to_string(i) + ".", out);
  return out;
}

template <typename T>
std::vector<BufferRef<T>> NetGraph<T>::buffers() {
  std::vector<BufferRef<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_buffers("L" + std::to_string(i) + ".", out);
  return out;
}

template <typename T>
void NetGraph<T>::zero_grads() {
  for (auto& l : layers_) l->zero_grads();
}

template <typename T>
std::size_t NetGraph<T>::param_count() {
  std::size_t n = 0;
  for (const auto& p : params()) n += p.value->numel();
  return n;
}

template class NetGraph<float>;
template class NetGraph<double>;

}  // namespace skssl
