#include "skssl/optim.hpp"

#include <cmath>

namespace skssl {

template <typename T>
void Sgd<T>::step(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) {
    if (!p.value->same_shape(*p.grad)) {
      throw ValidationError("sgd: gradient shape mismatch for " + p.name);
    }
    const T eta = static_cast<T>(lr);
    for (std::size_t i = 0; i < p.value->numel(); ++i) {
      p.value->data[i] -= eta * p.grad->data[i];
    }
  }
}

template <typename T>
void Adam<T>::step(const std::vector<ParamRef<T>>& params) {
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (const auto& p : params) {
    if (!p.value->same_shape(*p.grad)) {
      throw ValidationError("adam: gradient shape mismatch for " + p.name);
    }
    auto mit = m_.find(p.name);
    if (mit == m_.end()) {
      mit = m_.emplace(p.name, Tensor<T>(p.value->shape)).first;
      v_.emplace(p.name, Tensor<T>(p.value->shape));
    }
    Tensor<T>& m = mit->second;
    Tensor<T>& v = v_.at(p.name);
    if (!m.same_shape(*p.value)) {
      throw ValidationError("adam: stale state shape for " + p.name);
    }
    for (std::size_t i = 0; i < p.value->numel(); ++i) {
      const double g = static_cast<double>(p.grad->data[i]);
      double md = beta1 * static_cast<double>(m.data[i]) + (1.0 - beta1) * g;
      double vd = beta2 * static_cast<double>(v.data[i]) + (1.0 - beta2) * g * g;
      m.data[i] = static_cast<T>(md);
      v.data[i] = static_cast<T>(vd);
      const double mhat = md / bc1;
      const double vhat = vd / bc2;
      p.value->data[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

template <typename T>
std::map<std::string, Tensor<T>> Adam<T>::state() const {
  std::map<std::string, Tensor<T>> out;
  for (const auto& [name, ten] : m_) out.emplace("m." + name, ten);
  for (const auto& [name, ten] : v_) out.emplace("v." + name, ten);
  return out;
}

template <typename T>
void Adam<T>::load_state(const std::map<std::string, Tensor<T>>& s) {
  m_.clear();
  v_.clear();
  for (const auto& [name, ten] : s) {
    if (name.rfind("m.", 0) == 0) {
      m_.emplace(name.substr(2), ten);
    } else if (name.rfind("v.", 0) == 0) {
      v_.emplace(name.substr(2), ten);
    } else {
      throw DataError("adam: unknown state entry " + name);
    }
  }
}

template <typename T>
std::unique_ptr<Optimizer<T>> make_optimizer(const std::string& kind, double lr) {
  if (kind == "sgd") return std::make_unique<Sgd<T>>(lr);
  if (kind == "adam") return std::make_unique<Adam<T>>(lr);
  throw ValidationError("unknown optimizer kind '" + kind + "'");
}

template class Sgd<float>;
template class Sgd<double>;
template class Adam<float>;
template class Adam<double>;
template std::unique_ptr<Optimizer<float>> make_optimizer(const std::string&, double);
template std::unique_ptr<Optimizer<double>> make_optimizer(const std::string&, double);

}  // namespace skssl
