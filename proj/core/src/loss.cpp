#include "skssl/loss.hpp"

#include <cmath>

namespace skssl {

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw ValidationError("softmax_xent: expected rank-2 logits, got " + shape_str(logits.shape));
  }
  const std::size_t N = logits.shape[0], L = logits.shape[1];
  if (labels.size() != N) {
    throw ValidationError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(N) + " rows");
  }
  if (N == 0 || L == 0) throw ValidationError("softmax_xent: empty logits");
  LossResult<T> res;
  res.dlogits = Tensor<T>(logits.shape);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int lbl = labels[n];
    if (lbl < 0 || static_cast<std::size_t>(lbl) >= L) {
      throw ValidationError("softmax_xent: label " + std::to_string(lbl) + " outside [0," +
                            std::to_string(L) + ")");
    }
    const T* row = &logits.data[n * L];
    T mx = row[0];
    for (std::size_t j = 1; j < L; ++j) mx = std::max(mx, row[j]);
    double sumexp = 0.0;
    for (std::size_t j = 0; j < L; ++j) sumexp += std::exp(static_cast<double>(row[j] - mx));
    const double lse = std::log(sumexp);
    total += lse - static_cast<double>(row[lbl] - mx);
    T* drow = &res.dlogits.data[n * L];
    const double inv = 1.0 / (sumexp * static_cast<double>(N));
    for (std::size_t j = 0; j < L; ++j) {
      drow[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) * inv);
    }
    drow[lbl] -= T(1) / static_cast<T>(N);
  }
  res.loss = static_cast<T>(total / static_cast<double>(N));
  if (!std::isfinite(static_cast<double>(res.loss))) {
    throw DivergenceError("softmax_xent produced a non-finite loss");
  }
  return res;
}

template <typename T>
double accuracy(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2 || logits.shape[0] != labels.size() || labels.empty()) {
    throw ValidationError("accuracy: logits " + shape_str(logits.shape) + " vs " +
                          std::to_string(labels.size()) + " labels");
  }
  const std::size_t N = logits.shape[0], L = logits.shape[1];
  std::size_t hits = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const T* row = &logits.data[n * L];
    std::size_t best = 0;
    for (std::size_t j = 1; j < L; ++j)
      if (row[j] > row[best]) best = j;
    if (static_cast<int>(best) == labels[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(N);
}

template LossResult<float> softmax_xent(const Tensor<float>&, const std::vector<int>&);
template LossResult<double> softmax_xent(const Tensor<double>&, const std::vector<int>&);
template double accuracy(const Tensor<float>&, const std::vector<int>&);
template double accuracy(const Tensor<double>&, const std::vector<int>&);

}  // namespace skssl
