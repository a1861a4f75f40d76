#include "gazenlu/gazegen/sampling.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"

namespace gazenlu::gazegen {

using diffcore::Tensor;
using diffcore::detail::Node;

GumbelDraw gumbel_softmax_sample(const Tensor& logits, const std::vector<std::uint8_t>& valid,
                                 double temperature, diffcore::Rng& rng) {
  const std::size_t c = logits.cols();
  if (logits.rows() != 1 || valid.size() != c)
    throw diffcore::ShapeError("gumbel_softmax_sample: logits " + logits.shape_string() +
                               " do not match a mask of " + std::to_string(valid.size()));
  if (!(temperature > 0.0)) throw std::invalid_argument("gumbel: temperature must be positive");
  std::vector<double> g(c);
  for (double& x : g) x = rng.gumbel();

  GumbelDraw draw;
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  std::vector<double> mask(c);
  for (std::size_t k = 0; k < c; ++k) {
    mask[k] = valid[k] ? 0.0 : diffcore::kMaskedLogit;
    if (!valid[k]) continue;
    const double score = logits(0, k) + g[k];
    if (!any || score > best) {
      best = score;
      draw.hard = k;
      any = true;
    }
  }
  if (!any) throw std::logic_error("gumbel_softmax_sample: no valid class");
  const Tensor perturbed =
      diffcore::scale(diffcore::add(logits, Tensor::from_values(1, c, std::move(g),
                                                                logits.precision())),
                      1.0 / temperature);
  draw.relaxed = diffcore::softmax(perturbed, Tensor::from_values(1, c, std::move(mask)));
  return draw;
}

namespace {

std::size_t gumbel_max(const Tensor& logits, const std::vector<std::uint8_t>& valid,
                       diffcore::Rng& rng) {
  std::size_t hard = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t k = 0; k < valid.size(); ++k) {
    const double g = rng.gumbel();
    if (!valid[k]) continue;
    const double score = logits(0, k) + g;
    if (!any || score > best) {
      best = score;
      hard = k;
      any = true;
    }
  }
  if (!any) throw std::logic_error("sample_hard: no valid class");
  return hard;
}

}  // namespace

Scanpath sample_hard(SaccadePolicy& policy, diffcore::Rng& rng, std::size_t max_fixations) {
  if (max_fixations == 0) throw std::invalid_argument("sample_hard: max_fixations must be ≥ 1");
  const OffsetLayout& layout = policy.layout();
  const std::size_t words = policy.words();
  Scanpath path;
  std::ptrdiff_t current = kVirtualStart;
  while (path.fixations.size() < max_fixations) {
    const Tensor logits = policy.next_logits();
    const std::size_t hard = gumbel_max(logits, layout.valid_mask(current, words), rng);
    if (layout.is_stop(hard)) {
      path.stopped = true;
      break;
    }
    current += layout.offset_of(hard);
    path.fixations.push_back(static_cast<std::size_t>(current));
    policy.observe(path.fixations.back());
  }
  return path;
}

Scanpath sample_gumbel(SaccadePolicy& policy, diffcore::Rng& rng, const GumbelConfig& cfg,
                       std::size_t max_fixations) {
  cfg.validate();
  if (max_fixations == 0) throw std::invalid_argument("sample_gumbel: max_fixations must be ≥ 1");
  const OffsetLayout& layout = policy.layout();
  const std::size_t words = policy.words();
  Scanpath path;
  std::vector<Tensor> rows;
  Tensor position;  // soft_convolution state
  std::ptrdiff_t current = kVirtualStart;
  while (path.fixations.size() < max_fixations) {
    const Tensor logits = policy.next_logits();
    const GumbelDraw draw =
        gumbel_softmax_sample(logits, layout.valid_mask(current, words), cfg.temperature, rng);
    if (layout.is_stop(draw.hard)) {
      path.stopped = true;
      break;
    }
    if (cfg.mode == GumbelMode::straight_through) {
      std::vector<std::ptrdiff_t> cols(words, -1);
      for (std::size_t j = 0; j < words; ++j)
        if (auto cls = layout.class_of(static_cast<std::ptrdiff_t>(j) - current))
          cols[j] = static_cast<std::ptrdiff_t>(*cls);
      rows.push_back(diffcore::select_cols(
          diffcore::straight_through(draw.relaxed, draw.hard, cfg.surrogate), cols));
    } else {
      position = soft_convolution_step(position, draw.relaxed, layout, words);
      rows.push_back(position);
    }
    current += layout.offset_of(draw.hard);
    path.fixations.push_back(static_cast<std::size_t>(current));
    policy.observe(path.fixations.back());
  }
  path.soft_weights = diffcore::concat_rows(rows);
  return path;
}

Tensor soft_convolution_step(const Tensor& previous, const Tensor& step_probs,
                             const OffsetLayout& layout, std::size_t words) {
  const std::size_t c = layout.num_classes();
  if (step_probs.rows() != 1 || step_probs.cols() != c)
    throw diffcore::ShapeError("soft_convolution_step: step probabilities " +
                               step_probs.shape_string() + " do not have " + std::to_string(c) +
                               " classes");
  const bool from_start = !previous.defined();
  if (!from_start && (previous.rows() != 1 || previous.cols() != words))
    throw diffcore::ShapeError("soft_convolution_step: previous distribution " +
                               previous.shape_string() + " is not 1×" + std::to_string(words));

  const std::size_t moves = layout.stop_class();
  const auto y = step_probs.values();
  double total = 0.0;
  for (std::size_t k = 0; k < moves; ++k) total += y[k];
  if (!(total > 0.0)) throw std::domain_error("soft_convolution_step: no mass on any offset");

  // Source positions: the virtual start alone, or every word.
  std::vector<double> source = from_start ? std::vector<double>{1.0}
                                          : std::vector<double>(previous.values().begin(),
                                                                previous.values().end());
  const std::ptrdiff_t first = from_start ? kVirtualStart : 0;
  const auto w = static_cast<std::ptrdiff_t>(words);
  const std::ptrdiff_t min_offset = -layout.max_offset();
  auto land = [first, w, min_offset](std::size_t i, std::size_t k) {
    const std::ptrdiff_t j =
        first + static_cast<std::ptrdiff_t>(i) + min_offset + static_cast<std::ptrdiff_t>(k);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, w - 1));
  };

  std::vector<double> q(moves);
  for (std::size_t k = 0; k < moves; ++k) q[k] = y[k] / total;
  std::vector<double> out(words, 0.0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == 0.0) continue;
    for (std::size_t k = 0; k < moves; ++k) out[land(i, k)] += source[i] * q[k];
  }

  std::vector<Tensor> inputs{step_probs};
  if (!from_start) inputs.push_back(previous);
  return diffcore::make_result(
      "soft_convolution", 1, words, std::move(out), std::move(inputs),
      [source = std::move(source), q = std::move(q), total, moves, land,
       from_start](Node& self) {
        const auto& g = self.grad;
        Node& probs = *self.parents[0];
        if (probs.requires_grad) {
          std::vector<double> dq(moves, 0.0);
          for (std::size_t i = 0; i < source.size(); ++i)
            for (std::size_t k = 0; k < moves; ++k) dq[k] += source[i] * g[land(i, k)];
          double dot = 0.0;
          for (std::size_t k = 0; k < moves; ++k) dot += q[k] * dq[k];
          auto gp = probs.grad_buffer();
          for (std::size_t k = 0; k < moves; ++k) gp[k] += (dq[k] - dot) / total;
        }
        if (!from_start && self.parents[1]->requires_grad) {
          auto ga = self.parents[1]->grad_buffer();
          for (std::size_t i = 0; i < source.size(); ++i)
            for (std::size_t k = 0; k < moves; ++k) ga[i] += q[k] * g[land(i, k)];
        }
      });
}

}  // namespace gazenlu::gazegen
