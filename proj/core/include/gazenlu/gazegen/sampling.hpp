#pragma once

#include <cstddef>
#include <vector>

#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/diffcore/tensor.hpp"
#include "gazenlu/gazegen/saccade.hpp"

namespace gazenlu::gazegen {

/// Autoregressive source of saccade logits. `next_logits` scores the step
/// after the fixations observed so far; `observe` appends one fixation.
class SaccadePolicy {
 public:
  virtual ~SaccadePolicy() = default;
  virtual const OffsetLayout& layout() const = 0;
  virtual std::size_t words() const = 0;
  /// 1×C raw (unmasked) logits.
  virtual diffcore::Tensor next_logits() = 0;
  virtual void observe(std::size_t fixation) = 0;
};

struct GumbelDraw {
  std::size_t hard = 0;      // argmax over valid classes of logits + g
  diffcore::Tensor relaxed;  // softmax((logits + g) / τ) over valid classes
};

/// One Gumbel perturbation of a 1×C logit row. Draws exactly C variates
/// from `rng`, so hard and relaxed sampling consume identical streams.
GumbelDraw gumbel_softmax_sample(const diffcore::Tensor& logits,
                                 const std::vector<std::uint8_t>& valid, double temperature,
                                 diffcore::Rng& rng);

/// Gumbel-max categorical sampling until STOP or `max_fixations`.
Scanpath sample_hard(SaccadePolicy& policy, diffcore::Rng& rng, std::size_t max_fixations);

/// Relaxed sampling. The hard path is identical to sample_hard with the
/// same rng; soft_weights holds one row per fixation.
Scanpath sample_gumbel(SaccadePolicy& policy, diffcore::Rng& rng, const GumbelConfig& cfg,
                       std::size_t max_fixations);

/// Position distribution after one soft step: `previous` (1×W, or undefined
/// for the virtual start) convolved with the non-STOP part of `step_probs`
/// renormalized; mass landing outside the sentence moves to the nearest end.
diffcore::Tensor soft_convolution_step(const diffcore::Tensor& previous,
                                       const diffcore::Tensor& step_probs,
                                       const OffsetLayout& layout, std::size_t words);

}  // namespace gazenlu::gazegen
