#pragma once

#include <cstddef>
#include <vector>

#include "gazenlu/diffcore/tensor.hpp"
#include "gazenlu/textenc/tokenizer.hpp"

namespace gazenlu::augmentor {

struct SourceRow {
  std::size_t step = 0;
  std::size_t word = 0;
  std::size_t token = 0;  // row of the token matrix; unused for soft rows

  friend bool operator==(const SourceRow&, const SourceRow&) = default;
};

struct ReorderedSequence {
  diffcore::Tensor embeddings;  // F' × d
  std::vector<SourceRow> source_map;
};

/// Token rows of each fixated word, in fixation order, by direct gather.
ReorderedSequence reorder_hard(const diffcore::Tensor& tokens, const textenc::EncodedText& enc,
                               const std::vector<std::size_t>& fixations);

/// Same rows built as M · tokens, where M (F' × T) holds at each row the
/// soft weight of the fixated word on that step. With one-hot weights the
/// forward value equals reorder_hard bit for bit; gradients reach the
/// weights.
ReorderedSequence reorder_mixture(const diffcore::Tensor& tokens, const textenc::EncodedText& enc,
                                  const std::vector<std::size_t>& fixations,
                                  const diffcore::Tensor& soft_weights);

/// One row per step: soft_weights (F × W) times word-pooled embeddings.
ReorderedSequence reorder_soft(const diffcore::Tensor& word_embeddings,
                               const diffcore::Tensor& soft_weights);

/// The F' × T mixture matrix used by reorder_mixture.
diffcore::Tensor mixture_matrix(const textenc::EncodedText& enc,
                                const std::vector<std::size_t>& fixations,
                                const diffcore::Tensor& soft_weights);

}  // namespace gazenlu::augmentor
