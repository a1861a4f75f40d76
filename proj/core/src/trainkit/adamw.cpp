#include "gazenlu/trainkit/adamw.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gazenlu::trainkit {

AdamW::AdamW(diffcore::ParamList params, AdamWConfig config)
    : params_(std::move(params)), config_(config), state_(params_.size()) {
  if (!(config.lr > 0)) throw std::invalid_argument("adamw: lr must be positive");
  if (config.beta1 < 0 || config.beta1 >= 1 || config.beta2 < 0 || config.beta2 >= 1)
    throw std::invalid_argument("adamw: betas must lie in [0, 1)");
}

void AdamW::step() {
  const auto entries = params_.entries();
  for (const diffcore::NamedTensor& e : entries) {
    if (!e.tensor->has_grad()) continue;
    for (double g : e.tensor->grad())
      if (!std::isfinite(g))
        throw std::domain_error("adamw: non-finite gradient in parameter '" + e.name + "'");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    diffcore::Tensor& p = *entries[i].tensor;
    if (!p.has_grad()) continue;
    Slot& s = state_[i];
    const auto g = p.grad();
    if (s.m.empty()) {
      s.m.assign(g.size(), 0.0);
      s.v.assign(g.size(), 0.0);
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(s.t));
    auto values = p.mutable_values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      s.m[j] = config_.beta1 * s.m[j] + (1.0 - config_.beta1) * g[j];
      s.v[j] = config_.beta2 * s.v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = s.m[j] / c1;
      const double v_hat = s.v[j] / c2;
      values[j] -= config_.lr *
                   (m_hat / (std::sqrt(v_hat) + config_.eps) + config_.weight_decay * values[j]);
    }
    diffcore::detail::round_in_place(p.precision(), values);
  }
}

}  // namespace gazenlu::trainkit
