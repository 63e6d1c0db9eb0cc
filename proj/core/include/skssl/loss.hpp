#pragma once

#include <vector>

#include "skssl/tensor.hpp"

namespace skssl {

template <typename T>
struct LossResult {
  T loss = T(0);          // mean over the batch rows
  Tensor<T> dlogits;      // gradient of the mean loss w.r.t. logits
};

// L-way softmax cross entropy over logits [N,L]. Labels must lie in [0,L).
// Gradient rows each sum to zero.
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, const std::vector<int>& labels);

// Row-wise argmax classification accuracy.
template <typename T>
double accuracy(const Tensor<T>& logits, const std::vector<int>& labels);

}  // namespace skssl
