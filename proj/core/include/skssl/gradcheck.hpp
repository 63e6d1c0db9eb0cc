#pragma once

#include <map>
#include <string>
#include <vector>

#include "skssl/net.hpp"

namespace skssl {

struct GradCheckReport {
  // Max relative error per parameter-owning layer kind, plus "input" for the
  // gradient w.r.t. the network input.
  std::map<std::string, double> max_rel_err_by_kind;
  double max_rel_err = 0.0;
  std::string worst_name;
  // Every layer kind present in the graph, in chain order (non-parametric
  // kinds are exercised through the chain).
  std::vector<std::string> kinds_present;
  std::size_t checked_elements = 0;

  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central finite differences (default h=1e-5) against analytic gradients of
// the mean cross-entropy loss. Perturbs every parameter element and every
// input element; 64-bit graphs only.
GradCheckReport grad_check(NetGraph<double>& net, const Tensor<double>& input,
                           const std::vector<int>& labels, double h = 1e-5);

}  // namespace skssl
