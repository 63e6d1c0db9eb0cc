#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "skssl/layers.hpp"

namespace skssl {

// In-place parameter update from accumulated gradients. State (if any) is
// keyed by parameter name so it survives checkpointing.
template <typename T>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string kind() const = 0;
  virtual void step(const std::vector<ParamRef<T>>& params) = 0;
  // State tensors to persist, name -> tensor copy.
  virtual std::map<std::string, Tensor<T>> state() const { return {}; }
  virtual void load_state(const std::map<std::string, Tensor<T>>& s) {}
  virtual std::int64_t step_count() const { return 0; }
  virtual void set_step_count(std::int64_t) {}
  virtual double learning_rate() const = 0;
};

template <typename T>
class Sgd : public Optimizer<T> {
 public:
  explicit Sgd(double lr_) : lr(lr_) {}
  std::string kind() const override { return "sgd"; }
  void step(const std::vector<ParamRef<T>>& params) override;
  double learning_rate() const override { return lr; }

  double lr;
};

template <typename T>
class Adam : public Optimizer<T> {
 public:
  explicit Adam(double lr_, double beta1_ = 0.9, double beta2_ = 0.999, double eps_ = 1e-8)
      : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {}
  std::string kind() const override { return "adam"; }
  void step(const std::vector<ParamRef<T>>& params) override;
  std::map<std::string, Tensor<T>> state() const override;
  void load_state(const std::map<std::string, Tensor<T>>& s) override;
  std::int64_t step_count() const override { return t; }
  void set_step_count(std::int64_t t_) override { t = t_; }
  double learning_rate() const override { return lr; }

  double lr, beta1, beta2, eps;
  std::int64_t t = 0;

 private:
  std::map<std::string, Tensor<T>> m_, v_;
};

template <typename T>
std::unique_ptr<Optimizer<T>> make_optimizer(const std::string& kind, double lr);

}  // namespace skssl
