#pragma once

// Central-difference gradient verification. `build` must construct the loss
// deterministically from the current parameter values (re-seed any dropout
// rng inside it so repeated evaluations see identical masks).

#include <functional>

#include "seglid/graph.hpp"

namespace seglid {

struct GradCheckResult {
  double max_rel_err = 0.0;
  size_t n_checked = 0;
};

inline GradCheckResult grad_check(ParamStore& params,
                                  const std::function<Node*(Graph&)>& build,
                                  double h = 1e-4) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");
  Graph g;
  params.zero_grad();
  g.clear();
  Node* loss = build(g);
  g.backward(loss);

  auto eval = [&]() {
    g.clear();
    double f = build(g)->value.data[0];
    if (!std::isfinite(f)) throw std::runtime_error("grad_check: loss is not finite");
    return f;
  };

  GradCheckResult res;
  for (auto& p : params) {
    for (size_t i = 0; i < p.value.size(); ++i) {
      double saved = p.value.data[i];
      p.value.data[i] = saved + h;
      double fp = eval();
      p.value.data[i] = saved - h;
      double fm = eval();
      p.value.data[i] = saved;
      double numeric = (fp - fm) / (2.0 * h);
      double analytic = p.grad.data[i];
      double denom = std::abs(analytic) + std::abs(numeric);
      double rel = std::abs(analytic - numeric) / (denom > 1e-8 ? denom : 1e-8);
      if (rel > res.max_rel_err) res.max_rel_err = rel;
      ++res.n_checked;
    }
  }
  return res;
}

}  // namespace seglid
