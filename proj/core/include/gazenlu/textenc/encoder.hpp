#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/diffcore/tensor.hpp"
#include "gazenlu/textenc/tokenizer.hpp"

namespace gazenlu::textenc {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t width = 128;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_multiplier = 4;
  std::size_t max_len = 64;
  double dropout = 0.1;
};

struct TextEncoderOutput {
  diffcore::Tensor token_embeddings;  // T × d
  diffcore::Tensor cls_embedding;     // 1 × d
  diffcore::Tensor word_embeddings;   // W × d, mean of each word's token rows
};

/// Small pre-norm transformer encoder: learned token, absolute position and
/// segment embeddings, `layers` blocks of multi-head self-attention and a
/// GELU feed-forward, then a final layer norm.
class TextEncoder {
 public:
  static TextEncoder create(const EncoderConfig& config, const diffcore::Initializer& init,
                            const std::string& name);

  /// `dropout_rng` null means evaluation mode (dropout off, deterministic).
  TextEncoderOutput encode(const EncodedText& enc, diffcore::Rng* dropout_rng = nullptr) const;

  void collect(diffcore::ParamList& params, const std::string& name);
  const EncoderConfig& config() const { return config_; }

 private:
  struct Block {
    diffcore::LayerNorm attn_norm;
    diffcore::Linear query, key, value, out;
    diffcore::LayerNorm ffn_norm;
    diffcore::Linear ffn_in, ffn_out;
  };

  EncoderConfig config_;
  diffcore::Tensor token_table_;
  diffcore::Tensor position_table_;
  diffcore::Tensor segment_table_;
  std::vector<Block> blocks_;
  diffcore::LayerNorm final_norm_;
};

}  // namespace gazenlu::textenc
