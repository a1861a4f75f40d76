#include <filesystem>

#include "doctest.h"
#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/textenc/encoder.hpp"
#include "gazenlu/textenc/tokenizer.hpp"
#include "gazenlu/textenc/vocab.hpp"

using namespace gazenlu;
using namespace gazenlu::textenc;

namespace {

const Vocab& small_vocab() {
  static const Vocab v = [] {
    const std::vector<std::string> corpus = {"the cat sat on the mat", "a cat and a hat",
                                             "the bat sat", "caterpillars eat leaves"};
    return Vocab::build(corpus, 60);
  }();
  return v;
}

// Reassembles a word from its pieces.
std::string join_pieces(const Vocab& vocab, const std::vector<std::size_t>& ids) {
  std::string out;
  for (std::size_t id : ids) out += vocab.token(id);
  return out;
}

}  // namespace

TEST_CASE("specials occupy the first four ids") {
  const Vocab& v = small_vocab();
  CHECK(v.token(kClsId) == "[CLS]");
  CHECK(v.token(kSepId) == "[SEP]");
  CHECK(v.token(kPadId) == "[PAD]");
  CHECK(v.token(kUnkId) == "[UNK]");
  CHECK(v.size() <= 60);
}

TEST_CASE("every character of the corpus is in the vocabulary") {
  const Vocab& v = small_vocab();
  for (const char* c : {"t", "h", "e", "c", "a", "s", "p", "r", "l", "v"}) CHECK(v.id(c).has_value());
}

TEST_CASE("normalization lowercases and splits on whitespace") {
  const auto words = normalize_words("  The\tCAT  sat\n");
  REQUIRE(words.size() == 3);
  CHECK(words[0] == "the");
  CHECK(words[1] == "cat");
}

TEST_CASE("utf8_chars splits code points") {
  const auto chars = utf8_chars("na\xc3\xafve");
  CHECK(chars.size() == 5);
  CHECK(chars[2] == "\xc3\xaf");
}

TEST_CASE("greedy segmentation reassembles the word") {
  const Vocab& v = small_vocab();
  for (const char* w : {"cat", "caterpillars", "leaves", "thesat", "batcat"}) {
    const auto pieces = segment_word(w, v);
    CHECK(join_pieces(v, pieces) == w);
  }
}

TEST_CASE("unknown characters become [UNK]") {
  const Vocab& v = small_vocab();
  const auto pieces = segment_word("c#t", v);
  REQUIRE(pieces.size() == 3);
  CHECK(pieces[1] == kUnkId);
}

TEST_CASE("vocabulary round-trips through text") {
  const Vocab& v = small_vocab();
  const Vocab back = Vocab::from_text(v.to_text());
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.token(i) == v.token(i));
}

TEST_CASE("vocabulary build is deterministic") {
  const std::vector<std::string> corpus = {"alpha beta gamma", "beta gamma delta", "gamma"};
  CHECK(Vocab::build(corpus, 40).to_text() == Vocab::build(corpus, 40).to_text());
}

TEST_CASE("single sentence layout") {
  const EncodedText enc = tokenize("the cat sat", std::nullopt, small_vocab(), 64);
  validate(enc);
  CHECK(enc.token_ids.front() == kClsId);
  CHECK(enc.token_ids.back() == kSepId);
  CHECK(enc.word_count() == 3);
  CHECK(enc.first_segment_words == 3);
  CHECK(enc.word_spans.front().first == 1);
  for (std::uint8_t s : enc.segment_ids) CHECK(s == 0);
}

TEST_CASE("sentence pair layout") {
  const EncodedText enc = tokenize("the cat", std::string_view("a hat"), small_vocab(), 64);
  validate(enc);
  CHECK(enc.word_count() == 4);
  CHECK(enc.first_segment_words == 2);
  std::size_t seps = 0;
  for (std::size_t id : enc.token_ids) seps += id == kSepId;
  CHECK(seps == 2);
  CHECK(enc.segment_ids.back() == 1);
  CHECK(enc.segment_ids.front() == 0);
}

TEST_CASE("property: word spans tile the content tokens in order") {
  diffcore::Rng rng(5, 0);
  const std::vector<std::string> pool = {"the", "cat", "caterpillars", "zq", "mat", "leaves", "a"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    const std::size_t na = 1 + rng.below(12), nb = rng.below(6);
    for (std::size_t i = 0; i < na; ++i) a += (i ? " " : "") + pool[rng.below(pool.size())];
    for (std::size_t i = 0; i < nb; ++i) b += (i ? " " : "") + pool[rng.below(pool.size())];
    const std::size_t max_len = 24 + rng.below(30);
    const auto enc = nb ? tokenize(a, std::string_view(b), small_vocab(), max_len)
                        : tokenize(a, std::nullopt, small_vocab(), max_len);
    validate(enc);
    CHECK(enc.length() <= max_len);
    CHECK(enc.words.size() == enc.word_count());
    for (std::size_t w = 0; w + 1 < enc.word_count(); ++w) {
      const bool crosses = w + 1 == enc.first_segment_words;
      CHECK(enc.word_spans[w].second + (crosses ? 1 : 0) == enc.word_spans[w + 1].first);
    }
    for (std::size_t w = 0; w < enc.word_count(); ++w) {
      const auto [begin, end] = enc.word_spans[w];
      const std::vector<std::size_t> ids(enc.token_ids.begin() + begin, enc.token_ids.begin() + end);
      if (enc.words[w] != "zq") CHECK(join_pieces(small_vocab(), ids) == enc.words[w]);
    }
  }
}

TEST_CASE("truncation drops whole words from the longer segment") {
  const std::string longer = "the cat sat on the mat the cat sat on the mat";
  const EncodedText enc = tokenize("a hat", std::string_view(longer), small_vocab(), 12);
  validate(enc);
  CHECK(enc.length() <= 12);
  CHECK(enc.first_segment_words == 2);
  CHECK(enc.word_count() > 2);
}

TEST_CASE("padding extends with [PAD] and a zero attention mask") {
  const EncodedText enc = pad_to(tokenize("the cat", std::nullopt, small_vocab(), 64), 10);
  CHECK(enc.length() == 10);
  CHECK(enc.token_ids.back() == kPadId);
  CHECK(enc.attention_mask.back() == 0);
  CHECK(enc.attention_mask.front() == 1);
}

TEST_CASE("encoder shapes and word pooling") {
  EncoderConfig cfg;
  cfg.vocab_size = small_vocab().size();
  cfg.width = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  const TextEncoder enc = TextEncoder::create(cfg, diffcore::Initializer(1), "lm");
  const EncodedText text = tokenize("the caterpillars sat", std::nullopt, small_vocab(), 64);
  const TextEncoderOutput out = enc.encode(text);
  CHECK(out.token_embeddings.rows() == text.length());
  CHECK(out.token_embeddings.cols() == 8);
  CHECK(out.cls_embedding.rows() == 1);
  REQUIRE(out.word_embeddings.rows() == 3);
  const auto [b, e] = text.word_spans[1];
  double mean = 0;
  for (std::size_t t = b; t < e; ++t) mean += out.token_embeddings(t, 3) / static_cast<double>(e - b);
  CHECK(out.word_embeddings(1, 3) == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("padding does not change encoder outputs") {
  EncoderConfig cfg;
  cfg.vocab_size = small_vocab().size();
  cfg.width = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  const TextEncoder enc = TextEncoder::create(cfg, diffcore::Initializer(3), "lm");
  const EncodedText text = tokenize("the cat sat", std::nullopt, small_vocab(), 64);
  const auto a = enc.encode(text);
  const auto b = enc.encode(pad_to(text, text.length() + 5));
  for (std::size_t w = 0; w < 3; ++w)
    for (std::size_t c = 0; c < 8; ++c)
      CHECK(a.word_embeddings(w, c) == doctest::Approx(b.word_embeddings(w, c)).epsilon(1e-5));
}

TEST_CASE("evaluation encoding is deterministic; training dropout is seeded") {
  EncoderConfig cfg;
  cfg.vocab_size = small_vocab().size();
  cfg.width = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.dropout = 0.5;
  const TextEncoder enc = TextEncoder::create(cfg, diffcore::Initializer(3), "lm");
  const EncodedText text = tokenize("the cat sat", std::nullopt, small_vocab(), 64);
  CHECK(enc.encode(text).cls_embedding(0, 0) == enc.encode(text).cls_embedding(0, 0));
  diffcore::Rng r1(1, 1), r2(1, 1);
  CHECK(enc.encode(text, &r1).cls_embedding(0, 0) == enc.encode(text, &r2).cls_embedding(0, 0));
}
