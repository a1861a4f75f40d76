#include "gazenlu/textenc/tokenizer.hpp"

#include <numeric>
#include <stdexcept>

namespace gazenlu::textenc {

std::vector<std::size_t> segment_word(std::string_view word, const Vocab& vocab) {
  const auto chars = utf8_chars(word);
  std::vector<std::size_t> pieces;
  std::size_t i = 0;
  while (i < chars.size()) {
    const std::size_t longest = std::min(vocab.longest_token_chars(), chars.size() - i);
    std::size_t matched = 0;
    std::size_t id = kUnkId;
    std::string candidate;
    for (std::size_t n = 1; n <= longest; ++n) candidate += chars[i + n - 1];
    for (std::size_t n = longest; n >= 1; --n) {
      if (auto found = vocab.id(candidate)) {
        matched = n;
        id = *found;
        break;
      }
      candidate.resize(candidate.size() - chars[i + n - 1].size());
    }
    pieces.push_back(id);
    i += matched == 0 ? 1 : matched;
  }
  if (pieces.size() > vocab.max_pieces_per_word) return {kUnkId};
  return pieces;
}

EncodedText tokenize(std::string_view text1, std::optional<std::string_view> text2,
                     const Vocab& vocab, std::size_t max_len) {
  if (max_len < 4) throw std::invalid_argument("tokenize: max_len must be at least 4");
  std::vector<std::string> words[2];
  words[0] = normalize_words(text1);
  if (words[0].empty()) throw std::invalid_argument("tokenize: first segment is empty");
  const bool pair = text2.has_value();
  if (pair) {
    words[1] = normalize_words(*text2);
    if (words[1].empty()) throw std::invalid_argument("tokenize: second segment is empty");
  }

  std::vector<std::vector<std::size_t>> pieces[2];
  std::size_t tokens[2] = {0, 0};
  for (int s = 0; s < (pair ? 2 : 1); ++s) {
    for (const std::string& w : words[s]) {
      pieces[s].push_back(segment_word(w, vocab));
      tokens[s] += pieces[s].back().size();
    }
  }
  const std::size_t specials = pair ? 3 : 2;
  while (specials + tokens[0] + tokens[1] > max_len) {
    const int s = (pair && tokens[1] >= tokens[0]) ? 1 : 0;
    if (pieces[s].size() <= 1) {
      throw std::invalid_argument("tokenize: input cannot fit max_len " +
                                  std::to_string(max_len) + " without splitting a word");
    }
    tokens[s] -= pieces[s].back().size();
    pieces[s].pop_back();
    words[s].pop_back();
  }

  EncodedText enc;
  enc.token_ids.push_back(kClsId);
  enc.segment_ids.push_back(0);
  for (int s = 0; s < (pair ? 2 : 1); ++s) {
    for (std::size_t w = 0; w < pieces[s].size(); ++w) {
      const std::size_t begin = enc.token_ids.size();
      for (std::size_t id : pieces[s][w]) {
        enc.token_ids.push_back(id);
        enc.segment_ids.push_back(static_cast<std::uint8_t>(s));
      }
      enc.word_spans.emplace_back(begin, enc.token_ids.size());
      enc.words.push_back(words[s][w]);
    }
    enc.token_ids.push_back(kSepId);
    enc.segment_ids.push_back(static_cast<std::uint8_t>(s));
  }
  enc.first_segment_words = pieces[0].size();
  enc.attention_mask.assign(enc.token_ids.size(), 1);
  return enc;
}

EncodedText pad_to(EncodedText enc, std::size_t length) {
  const std::uint8_t seg = enc.segment_ids.empty() ? 0 : enc.segment_ids.back();
  while (enc.token_ids.size() < length) {
    enc.token_ids.push_back(kPadId);
    enc.segment_ids.push_back(seg);
    enc.attention_mask.push_back(0);
  }
  return enc;
}

void validate(const EncodedText& enc) {
  const std::size_t n = enc.token_ids.size();
  if (n < 3 || enc.token_ids.front() != kClsId)
    throw std::logic_error("encoded text must start with [CLS]");
  if (enc.segment_ids.size() != n || enc.attention_mask.size() != n)
    throw std::logic_error("segment/attention arrays have the wrong length");
  std::size_t active = 0;
  while (active < n && enc.attention_mask[active] == 1) ++active;
  for (std::size_t i = active; i < n; ++i)
    if (enc.attention_mask[i] != 0 || enc.token_ids[i] != kPadId)
      throw std::logic_error("padding must be a [PAD] tail with attention_mask 0");
  if (enc.token_ids[active - 1] != kSepId) throw std::logic_error("sequence must end with [SEP]");
  std::size_t seps = 0;
  for (std::size_t i = 0; i < active; ++i) seps += enc.token_ids[i] == kSepId;
  if (seps < 1 || seps > 2) throw std::logic_error("expected one or two [SEP] tokens");

  // Spans must tile exactly the content tokens: everything in [1, active)
  // that is not a [SEP].
  std::size_t cursor = 1;
  for (const auto& [b, e] : enc.word_spans) {
    if (b >= e) throw std::logic_error("empty word span");
    if (enc.token_ids[cursor] == kSepId && b == cursor + 1) ++cursor;
    if (b != cursor) throw std::logic_error("word spans are not contiguous over content tokens");
    for (std::size_t i = b; i < e; ++i)
      if (enc.token_ids[i] == kSepId || enc.token_ids[i] == kClsId)
        throw std::logic_error("word span covers a special token");
    cursor = e;
  }
  if (cursor + 1 != active)
    throw std::logic_error("word spans do not reach the final [SEP]");
  if (enc.words.size() != enc.word_spans.size())
    throw std::logic_error("words and word_spans disagree");
}

}  // namespace gazenlu::textenc
