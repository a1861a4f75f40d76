#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/diffcore/tensor.hpp"

namespace gazenlu::diffcore {

/// Additive surrogate for -inf in masked softmax.
inline constexpr double kMaskedLogit = -1e9;

using Span = std::pair<std::size_t, std::size_t>;  // [begin, end)

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise binary ops. `b` may match `a`, be a 1×cols row broadcast over
// the rows of `a`, or be a 1×1 scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
/// tanh-approximated GELU.
Tensor gelu(const Tensor& a);

/// Row-wise softmax. `mask`, when defined, is a constant additive term with
/// the shape of `a` or a 1×cols row; masked entries hold kMaskedLogit.
Tensor softmax(const Tensor& a, const Tensor& mask = {});
Tensor log_softmax(const Tensor& a, const Tensor& mask = {});

/// Row-wise layer normalization with 1×cols gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Row gather; also serves as embedding lookup.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
inline Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  return gather_rows(table, ids);
}
/// Column gather; a negative index produces a zero column.
Tensor select_cols(const Tensor& x, std::span<const std::ptrdiff_t> cols);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
/// One output row per span: the mean of the input rows in [begin, end).
Tensor segment_mean(const Tensor& x, std::span<const Span> spans);

/// Inverted dropout; identity (same tensor) when `train` is false or p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool train);

/// Mean over rows of -log softmax(logits + mask)[target]. `mask` as in
/// softmax.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     const Tensor& mask = {});
/// Mean squared error over all elements.
Tensor mse_loss(const Tensor& prediction, const Tensor& target);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Straight-through estimator on a 1×C row: the forward value is the
/// one-hot vector at `hard_col`; the backward pass hands the incoming
/// gradient to `soft` unchanged. With `surrogate` set, the forward value is
/// `soft` itself, which makes the backward pass an exact derivative
/// (used by gradient checks).
Tensor straight_through(const Tensor& soft, std::size_t hard_col, bool surrogate = false);

/// Fused GRU over a T×in sequence from a 1×h initial state. Weights use the
/// [reset | update | candidate] column layout: w_ih in×3h, w_hh h×3h,
/// biases 1×3h. Returns the T×h hidden states.
Tensor gru(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& b_ih, const Tensor& b_hh);

/// Fused scaled dot-product attention, split into `heads` column groups.
/// q: T×d, k and v: S×d; key_mask is an optional 1×S additive mask.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            const Tensor& key_mask = {});

}  // namespace gazenlu::diffcore
