#include "skssl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "skssl/loss.hpp"

namespace skssl {
namespace {

double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

}  // namespace

GradCheckReport grad_check(NetGraph<double>& net, const Tensor<double>& input,
                           const std::vector<int>& labels, double h) {
  net.set_mode(NetMode::Train);
  GradCheckReport rep;
  for (const auto& l : net.layers()) l->collect_kinds(rep.kinds_present);

  net.zero_grads();
  auto out = net.forward(input);
  auto lr = softmax_xent(out, labels);
  Tensor<double> dinput = net.backward(lr.dlogits);

  auto params = net.params();
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  auto loss_at = [&]() {
    auto o = net.forward(input);
    return static_cast<double>(softmax_xent(o, labels).loss);
  };

  auto record = [&](const std::string& kind, const std::string& name, double ana, double num) {
    const double e = rel_err(ana, num);
    auto it = rep.max_rel_err_by_kind.find(kind);
    if (it == rep.max_rel_err_by_kind.end() || e > it->second)
      rep.max_rel_err_by_kind[kind] = e;
    if (e > rep.max_rel_err) {
      rep.max_rel_err = e;
      rep.worst_name = name;
    }
    ++rep.checked_elements;
  };

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (std::size_t i = 0; i < p.value->numel(); ++i) {
      const double orig = p.value->data[i];
      p.value->data[i] = orig + h;
      const double lp = loss_at();
      p.value->data[i] = orig - h;
      const double lm = loss_at();
      p.value->data[i] = orig;
      record(p.kind, p.name, analytic[pi].data[i], (lp - lm) / (2.0 * h));
    }
  }

  Tensor<double> x = input;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    auto op = net.forward(x);
    const double lp = static_cast<double>(softmax_xent(op, labels).loss);
    x.data[i] = orig - h;
    auto om = net.forward(x);
    const double lm = static_cast<double>(softmax_xent(om, labels).loss);
    x.data[i] = orig;
    record("input", "input[" + std::to_string(i) + "]", dinput.data[i], (lp - lm) / (2.0 * h));
  }

  return rep;
}

}  // namespace skssl
