#include "gazenlu/augmentor/reorder.hpp"

#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/gazegen/saccade.hpp"

namespace gazenlu::augmentor {

using diffcore::Tensor;

namespace {

std::vector<SourceRow> expand(const textenc::EncodedText& enc,
                              const std::vector<std::size_t>& fixations) {
  gazegen::check_fixations(fixations, enc.word_count());
  std::vector<SourceRow> rows;
  for (std::size_t s = 0; s < fixations.size(); ++s) {
    const auto [begin, end] = enc.word_spans[fixations[s]];
    for (std::size_t t = begin; t < end; ++t) rows.push_back({s, fixations[s], t});
  }
  return rows;
}

}  // namespace

ReorderedSequence reorder_hard(const Tensor& tokens, const textenc::EncodedText& enc,
                               const std::vector<std::size_t>& fixations) {
  ReorderedSequence out;
  out.source_map = expand(enc, fixations);
  if (out.source_map.empty()) throw std::invalid_argument("reorder: empty scanpath");
  std::vector<std::size_t> ids;
  ids.reserve(out.source_map.size());
  for (const SourceRow& r : out.source_map) ids.push_back(r.token);
  out.embeddings = diffcore::gather_rows(tokens, ids);
  return out;
}

Tensor mixture_matrix(const textenc::EncodedText& enc, const std::vector<std::size_t>& fixations,
                      const Tensor& soft_weights) {
  const std::size_t w = enc.word_count();
  if (soft_weights.rows() != fixations.size() || soft_weights.cols() != w)
    throw diffcore::ShapeError("mixture_matrix: soft weights " + soft_weights.shape_string() +
                               " do not match " + std::to_string(fixations.size()) +
                               " fixations over " + std::to_string(w) + " words");
  const std::vector<SourceRow> rows = expand(enc, fixations);
  const std::size_t t = enc.length();
  std::vector<double> m(rows.size() * t, 0.0);
  const auto sw = soft_weights.values();
  for (std::size_t r = 0; r < rows.size(); ++r)
    m[r * t + rows[r].token] = sw[rows[r].step * w + rows[r].word];
  return diffcore::make_result("mixture_matrix", rows.size(), t, std::move(m), {soft_weights},
                               [rows, t, w](diffcore::detail::Node& self) {
                                 auto g = self.parents[0]->grad_buffer();
                                 for (std::size_t r = 0; r < rows.size(); ++r)
                                   g[rows[r].step * w + rows[r].word] +=
                                       self.grad[r * t + rows[r].token];
                               });
}

ReorderedSequence reorder_mixture(const Tensor& tokens, const textenc::EncodedText& enc,
                                  const std::vector<std::size_t>& fixations,
                                  const Tensor& soft_weights) {
  if (fixations.empty()) throw std::invalid_argument("reorder: empty scanpath");
  ReorderedSequence out;
  out.source_map = expand(enc, fixations);
  out.embeddings = diffcore::matmul(mixture_matrix(enc, fixations, soft_weights), tokens);
  return out;
}

ReorderedSequence reorder_soft(const Tensor& word_embeddings, const Tensor& soft_weights) {
  if (soft_weights.rows() == 0) throw std::invalid_argument("reorder: empty scanpath");
  ReorderedSequence out;
  out.embeddings = diffcore::matmul(soft_weights, word_embeddings);
  const auto sw = soft_weights.values();
  const std::size_t w = soft_weights.cols();
  for (std::size_t s = 0; s < soft_weights.rows(); ++s) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < w; ++j)
      if (sw[s * w + j] > sw[s * w + best]) best = j;
    out.source_map.push_back({s, best, 0});
  }
  return out;
}

}  // namespace gazenlu::augmentor
