#include "gazenlu/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gazenlu/diffcore/rng.hpp"

namespace gazenlu::diffcore {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const std::function<Tensor()>& fn, std::span<Tensor> inputs,
                          const GradcheckOptions& options) {
  GradcheckReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].precision() != Precision::f64) {
      report.failure = "input " + std::to_string(i) + " is not float64";
      return report;
    }
    inputs[i].set_requires_grad(true);
    inputs[i].zero_grad();
  }

  Tensor loss = fn();
  if (loss.size() != 1) {
    report.failure = "function is not scalar-valued: " + loss.shape_string();
    return report;
  }
  if (!std::isfinite(loss.item())) {
    report.failure = "non-finite loss at the unperturbed point";
    return report;
  }
  backward(loss);

  Rng picker(options.coordinate_seed, 0x6772616463686bull);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& x = inputs[i];
    std::vector<double> analytic(x.size(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

    std::vector<std::size_t> coords(x.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
      for (std::size_t k = 0; k < options.max_coordinates; ++k) {
        const std::size_t j = k + picker.below(coords.size() - k);
        std::swap(coords[k], coords[j]);
      }
      coords.resize(options.max_coordinates);
    }

    InputGradReport entry;
    entry.input = i;
    auto values = x.mutable_values();
    for (std::size_t c : coords) {
      const double saved = values[c];
      values[c] = saved + options.step;
      const double up = fn().item();
      values[c] = saved - options.step;
      const double down = fn().item();
      values[c] = saved;
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(analytic[c])) {
        report.failure = "non-finite value at input " + std::to_string(i) + " coordinate " +
                         std::to_string(c);
        report.inputs.push_back(entry);
        return report;
      }
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[c], numeric, options.scale_floor);
      if (err > entry.max_rel_error || (err == 0.0 && entry.max_rel_error == 0.0)) {
        entry.max_rel_error = err;
        entry.worst_index = c;
        entry.analytic = analytic[c];
        entry.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.inputs.push_back(entry);
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace gazenlu::diffcore
