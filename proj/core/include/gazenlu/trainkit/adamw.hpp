#pragma once

#include <cstddef>
#include <vector>

#include "gazenlu/diffcore/layers.hpp"

namespace gazenlu::trainkit {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay:
///   p ← p − lr·(m̂/(√v̂ + eps) + wd·p)
/// Parameters without a gradient are skipped entirely (no decay, no step
/// count). A non-finite gradient raises std::domain_error naming the
/// parameter before anything is updated.
class AdamW {
 public:
  AdamW(diffcore::ParamList params, AdamWConfig config);

  void step();
  void zero_grad() const { params_.zero_grad(); }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamWConfig& config() const { return config_; }
  const diffcore::ParamList& params() const { return params_; }
  std::size_t steps(std::size_t param) const { return state_[param].t; }

 private:
  struct Slot {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  diffcore::ParamList params_;
  AdamWConfig config_;
  std::vector<Slot> state_;
};

}  // namespace gazenlu::trainkit
