#include "skssl/tensor.hpp"

#include <cmath>

namespace skssl {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {
template <typename T>
void check_finite_impl(const Tensor<T>& t, const char* what) {
  for (const T v : t.data) {
    if (!std::isfinite(v)) {
      throw DivergenceError(std::string("non-finite value in ") + what);
    }
  }
}
}  // namespace

void check_finite(const Tensor<float>& t, const char* what) { check_finite_impl(t, what); }
void check_finite(const Tensor<double>& t, const char* what) { check_finite_impl(t, what); }

}  // namespace skssl
