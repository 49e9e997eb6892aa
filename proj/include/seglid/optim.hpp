#pragma once

// SGD and Adam. step() consumes the gradients accumulated in the store and
// zeroes them afterwards, so one step corresponds to one training example
// (or one full batch, for the CRF trainers that drive updates manually).

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "seglid/graph.hpp"

namespace seglid {

struct OptimizerConfig {
  std::string kind = "adam";  // "sgd" | "adam"
  double lr = 0.001;          // sgd default is 0.1, set by callers
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerConfig adam(double lr = 0.001) { return {"adam", lr, 0.9, 0.999, 1e-8}; }
  static OptimizerConfig sgd(double lr = 0.1) { return {"sgd", lr, 0.0, 0.0, 0.0}; }
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.kind != "sgd" && cfg_.kind != "adam")
      throw std::invalid_argument("unknown optimizer kind: " + cfg_.kind);
  }

  long long timestep() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

  void step(ParamStore& params) {
    ++t_;
    if (cfg_.kind == "sgd") {
      for (auto& p : params) {
        for (size_t i = 0; i < p.value.size(); ++i) p.value.data[i] -= cfg_.lr * p.grad.data[i];
      }
    } else {
      double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (auto& p : params) {
        Moments& mo = moments_[&p];
        if (mo.m.size() != p.value.size()) {
          mo.m.assign(p.value.size(), 0.0);
          mo.v.assign(p.value.size(), 0.0);
        }
        for (size_t i = 0; i < p.value.size(); ++i) {
          double g = p.grad.data[i];
          mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
          mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
          double mhat = mo.m[i] / bc1;
          double vhat = mo.v[i] / bc2;
          p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
      }
    }
    params.zero_grad();
  }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  OptimizerConfig cfg_;
  long long t_ = 0;
  std::unordered_map<Parameter*, Moments> moments_;
};

}  // namespace seglid
