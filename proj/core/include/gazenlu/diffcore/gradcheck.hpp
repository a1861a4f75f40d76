#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gazenlu/diffcore/tensor.hpp"

namespace gazenlu::diffcore {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Gradients smaller than this are compared on an absolute scale.
  double scale_floor = 1e-4;
  // Checks at most this many coordinates per input (0 = all), chosen with
  // `coordinate_seed`.
  std::size_t max_coordinates = 0;
  std::uint64_t coordinate_seed = 0;
};

struct InputGradReport {
  std::size_t input = 0;
  std::size_t worst_index = 0;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::vector<InputGradReport> inputs;
  std::string failure;  // set when a non-finite value or other hard failure occurs
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

/// Compares reverse-mode gradients of the scalar `fn()` with respect to each
/// tensor in `inputs` against central finite differences. `fn` must read the
/// inputs (shared storage), which are perturbed in place and restored.
/// Inputs must be f64 leaves; requires_grad is switched on for the check.
GradcheckReport gradcheck(const std::function<Tensor()>& fn, std::span<Tensor> inputs,
                          const GradcheckOptions& options = {});

}  // namespace gazenlu::diffcore
