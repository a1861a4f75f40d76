#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/diffcore/tensor.hpp"
#include "gazenlu/gazegen/sampling.hpp"
#include "gazenlu/gazegen/saccade.hpp"
#include "gazenlu/textenc/encoder.hpp"

namespace gazenlu::gazegen {

struct GeneratorConfig {
  textenc::EncoderConfig encoder;
  std::size_t hidden = 128;
  std::size_t max_offset_len = 16;
  std::size_t max_words = 64;
  /// When set the generator owns no text encoder; callers pass the
  /// language model's outputs instead.
  bool share_text_encoder = false;
};

/// Dual-encoder scanpath generator. Word states come from a bidirectional
/// GRU over pooled word embeddings; the fixation history runs through a
/// unidirectional GRU; single-head cross-attention and a linear layer
/// produce saccade logits.
class ScanpathGenerator {
 public:
  static ScanpathGenerator create(const GeneratorConfig& config,
                                  const diffcore::Initializer& init, const std::string& name);

  const GeneratorConfig& config() const { return config_; }
  const OffsetLayout& layout() const { return layout_; }
  bool owns_text_encoder() const { return text_encoder_.has_value(); }
  /// Throws std::logic_error when the encoder is shared.
  textenc::TextEncoderOutput encode_text(const textenc::EncodedText& enc,
                                         diffcore::Rng* dropout_rng = nullptr) const;

  /// W×h word states.
  diffcore::Tensor encode_words(const textenc::TextEncoderOutput& out) const;
  /// Decoder state after the given prefix (learned start state when empty).
  diffcore::Tensor encode_history(const std::vector<std::size_t>& prefix,
                                  const diffcore::Tensor& word_states) const;
  /// (n+1)×h: the start state followed by the state after each fixation.
  diffcore::Tensor history_states(const std::vector<std::size_t>& fixations,
                                  const diffcore::Tensor& word_states) const;
  /// k×C raw logits, one row per decoder state.
  diffcore::Tensor decode(const diffcore::Tensor& states, const diffcore::Tensor& word_states) const;

  /// Mean cross-entropy over all n+1 steps of a gold path (including STOP).
  diffcore::Tensor nll(const diffcore::Tensor& word_states,
                       const std::vector<std::size_t>& fixations) const;

  void collect(diffcore::ParamList& params, const std::string& name);

 private:
  friend class GeneratorPolicy;
  diffcore::Tensor history_input(std::size_t fixation, const diffcore::Tensor& word_states) const;
  diffcore::Tensor decode_with_keys(const diffcore::Tensor& states, const diffcore::Tensor& keys,
                                    const diffcore::Tensor& word_states) const;

  GeneratorConfig config_;
  OffsetLayout layout_{};
  std::optional<textenc::TextEncoder> text_encoder_;
  std::optional<diffcore::Linear> word_proj_;  // absent when encoder width == hidden
  diffcore::Tensor word_position_;             // max_words × d
  diffcore::Gru word_forward_, word_backward_;
  diffcore::Linear word_out_;                  // 2h → h
  diffcore::Tensor fixation_position_;         // max_words × h
  diffcore::Linear history_proj_;              // 2h → h
  diffcore::Gru history_gru_;
  diffcore::Tensor start_state_;               // 1 × h
  diffcore::Linear query_, key_;
  diffcore::Linear output_;                    // 2h → C
};

/// Incremental policy backed by a generator for one sentence.
class GeneratorPolicy final : public SaccadePolicy {
 public:
  GeneratorPolicy(const ScanpathGenerator& generator, diffcore::Tensor word_states);

  const OffsetLayout& layout() const override { return generator_.layout(); }
  std::size_t words() const override { return word_states_.rows(); }
  diffcore::Tensor next_logits() override;
  void observe(std::size_t fixation) override;

 private:
  const ScanpathGenerator& generator_;
  diffcore::Tensor word_states_;
  diffcore::Tensor keys_;
  diffcore::Tensor recurrent_;  // raw GRU hidden
  diffcore::Tensor state_;      // residual decoder state
};

}  // namespace gazenlu::gazegen
