#include "gazenlu/textenc/encoder.hpp"

#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"

namespace gazenlu::textenc {

using diffcore::Tensor;

namespace {
constexpr double kEmbeddingStd = 0.1;
}

TextEncoder TextEncoder::create(const EncoderConfig& config, const diffcore::Initializer& init,
                                const std::string& name) {
  if (config.vocab_size == 0) throw std::invalid_argument("text encoder: vocab_size is zero");
  if (config.heads == 0 || config.width % config.heads != 0)
    throw std::invalid_argument("text encoder: width must be divisible by heads");
  TextEncoder e;
  e.config_ = config;
  const std::size_t d = config.width;
  e.token_table_ = init.normal(name + ".token_table", config.vocab_size, d, kEmbeddingStd);
  e.position_table_ = init.normal(name + ".position_table", config.max_len, d, kEmbeddingStd);
  e.segment_table_ = init.normal(name + ".segment_table", 2, d, kEmbeddingStd);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = name + ".block" + std::to_string(l);
    Block b;
    b.attn_norm = diffcore::LayerNorm::create(init, d);
    b.query = diffcore::Linear::create(init, p + ".query", d, d);
    b.key = diffcore::Linear::create(init, p + ".key", d, d);
    b.value = diffcore::Linear::create(init, p + ".value", d, d);
    b.out = diffcore::Linear::create(init, p + ".out", d, d);
    b.ffn_norm = diffcore::LayerNorm::create(init, d);
    b.ffn_in = diffcore::Linear::create(init, p + ".ffn_in", d, d * config.ffn_multiplier);
    b.ffn_out = diffcore::Linear::create(init, p + ".ffn_out", d * config.ffn_multiplier, d);
    e.blocks_.push_back(std::move(b));
  }
  e.final_norm_ = diffcore::LayerNorm::create(init, d);
  return e;
}

TextEncoderOutput TextEncoder::encode(const EncodedText& enc, diffcore::Rng* dropout_rng) const {
  const std::size_t t = enc.length();
  if (t > config_.max_len)
    throw std::invalid_argument("text encoder: " + std::to_string(t) +
                                " tokens exceed max_len " + std::to_string(config_.max_len));
  for (std::size_t id : enc.token_ids)
    if (id >= config_.vocab_size)
      throw std::out_of_range("text encoder: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(config_.vocab_size));
  const bool train = dropout_rng != nullptr;
  diffcore::Rng unused;
  diffcore::Rng& rng = train ? *dropout_rng : unused;
  const double p = config_.dropout;

  std::vector<std::size_t> positions(t);
  std::vector<std::size_t> segments(t);
  std::vector<double> mask(t);
  for (std::size_t i = 0; i < t; ++i) {
    positions[i] = i;
    segments[i] = enc.segment_ids[i];
    mask[i] = enc.attention_mask[i] ? 0.0 : diffcore::kMaskedLogit;
  }
  const Tensor key_mask = Tensor::from_values(1, t, std::move(mask));

  Tensor x = diffcore::add(
      diffcore::add(diffcore::embedding(token_table_, enc.token_ids),
                    diffcore::embedding(position_table_, positions)),
      diffcore::embedding(segment_table_, segments));
  x = diffcore::dropout(x, p, rng, train);

  for (const Block& b : blocks_) {
    const Tensor h = b.attn_norm(x);
    const Tensor attn =
        diffcore::multi_head_attention(b.query(h), b.key(h), b.value(h), config_.heads, key_mask);
    x = diffcore::add(x, diffcore::dropout(b.out(attn), p, rng, train));
    const Tensor f = b.ffn_out(diffcore::gelu(b.ffn_in(b.ffn_norm(x))));
    x = diffcore::add(x, diffcore::dropout(f, p, rng, train));
  }
  x = final_norm_(x);

  TextEncoderOutput out;
  out.token_embeddings = x;
  out.cls_embedding = diffcore::slice_rows(x, 0, 1);
  out.word_embeddings = diffcore::segment_mean(x, enc.word_spans);
  return out;
}

void TextEncoder::collect(diffcore::ParamList& params, const std::string& name) {
  params.add(name + ".token_table", token_table_);
  params.add(name + ".position_table", position_table_);
  params.add(name + ".segment_table", segment_table_);
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const std::string p = name + ".block" + std::to_string(l);
    Block& b = blocks_[l];
    b.attn_norm.collect(params, p + ".attn_norm");
    b.query.collect(params, p + ".query");
    b.key.collect(params, p + ".key");
    b.value.collect(params, p + ".value");
    b.out.collect(params, p + ".out");
    b.ffn_norm.collect(params, p + ".ffn_norm");
    b.ffn_in.collect(params, p + ".ffn_in");
    b.ffn_out.collect(params, p + ".ffn_out");
  }
  final_norm_.collect(params, name + ".final_norm");
}

}  // namespace gazenlu::textenc
