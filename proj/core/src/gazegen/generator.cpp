#include "gazenlu/gazegen/generator.hpp"

#include <numeric>
#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"

namespace gazenlu::gazegen {

using diffcore::Tensor;

namespace {
constexpr double kEmbeddingStd = 0.1;
}

ScanpathGenerator ScanpathGenerator::create(const GeneratorConfig& config,
                                            const diffcore::Initializer& init,
                                            const std::string& name) {
  const std::size_t d = config.encoder.width;
  const std::size_t h = config.hidden;
  if (d == 0 || h == 0) throw std::invalid_argument("generator: widths must be positive");
  ScanpathGenerator g;
  g.config_ = config;
  g.layout_ = OffsetLayout(config.max_offset_len);
  if (!config.share_text_encoder)
    g.text_encoder_ = textenc::TextEncoder::create(config.encoder, init, name + ".text");
  if (d != h) g.word_proj_ = diffcore::Linear::create(init, name + ".word_proj", d, h, false);
  g.word_position_ = init.normal(name + ".word_position", config.max_words, d, kEmbeddingStd);
  g.word_forward_ = diffcore::Gru::create(init, name + ".word_forward", d, h);
  g.word_backward_ = diffcore::Gru::create(init, name + ".word_backward", d, h);
  g.word_out_ = diffcore::Linear::create(init, name + ".word_out", 2 * h, h);
  g.fixation_position_ =
      init.normal(name + ".fixation_position", config.max_words, h, kEmbeddingStd);
  g.history_proj_ = diffcore::Linear::create(init, name + ".history_proj", 2 * h, h, false);
  g.history_gru_ = diffcore::Gru::create(init, name + ".history", 2 * h, h);
  g.start_state_ = init.normal(name + ".start_state", 1, h, kEmbeddingStd);
  g.query_ = diffcore::Linear::create(init, name + ".query", h, h);
  g.key_ = diffcore::Linear::create(init, name + ".key", h, h);
  g.output_ = diffcore::Linear::create(init, name + ".output", 2 * h, g.layout_.num_classes());
  return g;
}

textenc::TextEncoderOutput ScanpathGenerator::encode_text(const textenc::EncodedText& enc,
                                                          diffcore::Rng* dropout_rng) const {
  if (!text_encoder_)
    throw std::logic_error("generator: text encoder is shared; pass the language model outputs");
  return text_encoder_->encode(enc, dropout_rng);
}

Tensor ScanpathGenerator::encode_words(const textenc::TextEncoderOutput& out) const {
  const Tensor& pooled = out.word_embeddings;
  const std::size_t w = pooled.rows();
  if (w == 0) throw diffcore::ShapeError("encode_words: sentence has no words");
  if (w > config_.max_words)
    throw diffcore::ShapeError("encode_words: " + std::to_string(w) + " words exceed max_words " +
                               std::to_string(config_.max_words));
  std::vector<std::size_t> positions(w);
  std::iota(positions.begin(), positions.end(), 0);
  const Tensor x = diffcore::add(pooled, diffcore::embedding(word_position_, positions));

  const std::size_t h = config_.hidden;
  const Tensor h0 = Tensor::zeros(1, h, x.precision());
  const Tensor fwd = word_forward_(x, h0);
  std::vector<std::size_t> reversed(positions.rbegin(), positions.rend());
  const Tensor bwd = diffcore::gather_rows(
      word_backward_(diffcore::gather_rows(x, reversed), h0), reversed);
  const Tensor both[] = {fwd, bwd};
  const Tensor recurrent = word_out_(diffcore::concat_cols(both));
  const Tensor skip = word_proj_ ? (*word_proj_)(x) : x;
  return diffcore::add(skip, recurrent);
}

Tensor ScanpathGenerator::history_input(std::size_t fixation, const Tensor& word_states) const {
  if (fixation >= word_states.rows())
    throw std::out_of_range("encode_history: fixation " + std::to_string(fixation) +
                            " outside sentence of " + std::to_string(word_states.rows()) +
                            " words");
  const std::size_t idx[] = {fixation};
  const Tensor parts[] = {diffcore::gather_rows(word_states, idx),
                          diffcore::gather_rows(fixation_position_, idx)};
  return diffcore::concat_cols(parts);
}

Tensor ScanpathGenerator::history_states(const std::vector<std::size_t>& fixations,
                                         const Tensor& word_states) const {
  check_fixations(fixations, word_states.rows());
  if (fixations.empty()) return start_state_;
  const Tensor parts[] = {diffcore::gather_rows(word_states, fixations),
                          diffcore::gather_rows(fixation_position_, fixations)};
  const Tensor in = diffcore::concat_cols(parts);
  const Tensor states = diffcore::add(history_proj_(in), history_gru_(in, start_state_));
  const Tensor rows[] = {start_state_, states};
  return diffcore::concat_rows(rows);
}

Tensor ScanpathGenerator::encode_history(const std::vector<std::size_t>& prefix,
                                         const Tensor& word_states) const {
  const Tensor all = history_states(prefix, word_states);
  return diffcore::slice_rows(all, all.rows() - 1, all.rows());
}

Tensor ScanpathGenerator::decode_with_keys(const Tensor& states, const Tensor& keys,
                                           const Tensor& word_states) const {
  const Tensor context = diffcore::multi_head_attention(query_(states), keys, word_states, 1);
  const Tensor parts[] = {context, states};
  return output_(diffcore::concat_cols(parts));
}

Tensor ScanpathGenerator::decode(const Tensor& states, const Tensor& word_states) const {
  return decode_with_keys(states, key_(word_states), word_states);
}

Tensor ScanpathGenerator::nll(const Tensor& word_states,
                              const std::vector<std::size_t>& fixations) const {
  const std::size_t w = word_states.rows();
  check_fixations(fixations, w);
  const std::size_t steps = fixations.size() + 1;
  std::vector<std::size_t> targets(steps);
  std::vector<double> mask;
  mask.reserve(steps * layout_.num_classes());
  std::ptrdiff_t current = kVirtualStart;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto valid = layout_.valid_mask(current, w);
    std::size_t cls = layout_.stop_class();
    if (t < fixations.size()) {
      const std::ptrdiff_t next = static_cast<std::ptrdiff_t>(fixations[t]);
      const auto c = layout_.class_of(next - current);
      if (!c)
        throw std::out_of_range("nll: step " + std::to_string(t) + " saccade " +
                                std::to_string(next - current) + " exceeds the offset range ±" +
                                std::to_string(layout_.max_offset()));
      cls = *c;
      current = next;
    }
    if (!valid[cls])
      throw std::invalid_argument("nll: step " + std::to_string(t) + " gold class " +
                                  std::to_string(cls) + " is masked");
    targets[t] = cls;
    for (std::uint8_t v : valid) mask.push_back(v ? 0.0 : diffcore::kMaskedLogit);
  }
  const Tensor logits = decode(history_states(fixations, word_states), word_states);
  return diffcore::cross_entropy(
      logits, targets, Tensor::from_values(steps, layout_.num_classes(), std::move(mask)));
}

void ScanpathGenerator::collect(diffcore::ParamList& params, const std::string& name) {
  if (text_encoder_) text_encoder_->collect(params, name + ".text");
  if (word_proj_) word_proj_->collect(params, name + ".word_proj");
  params.add(name + ".word_position", word_position_);
  word_forward_.collect(params, name + ".word_forward");
  word_backward_.collect(params, name + ".word_backward");
  word_out_.collect(params, name + ".word_out");
  params.add(name + ".fixation_position", fixation_position_);
  history_proj_.collect(params, name + ".history_proj");
  history_gru_.collect(params, name + ".history");
  params.add(name + ".start_state", start_state_);
  query_.collect(params, name + ".query");
  key_.collect(params, name + ".key");
  output_.collect(params, name + ".output");
}

GeneratorPolicy::GeneratorPolicy(const ScanpathGenerator& generator, Tensor word_states)
    : generator_(generator),
      word_states_(std::move(word_states)),
      keys_(generator.key_(word_states_)),
      recurrent_(generator.start_state_),
      state_(generator.start_state_) {}

Tensor GeneratorPolicy::next_logits() {
  return generator_.decode_with_keys(state_, keys_, word_states_);
}

void GeneratorPolicy::observe(std::size_t fixation) {
  const Tensor in = generator_.history_input(fixation, word_states_);
  recurrent_ = generator_.history_gru_(in, recurrent_);
  state_ = diffcore::add(generator_.history_proj_(in), recurrent_);
}

}  // namespace gazenlu::gazegen
