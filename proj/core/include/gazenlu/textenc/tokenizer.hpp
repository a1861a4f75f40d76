#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazenlu/textenc/vocab.hpp"

namespace gazenlu::textenc {

using TokenSpan = std::pair<std::size_t, std::size_t>;  // [begin, end)

/// Token sequence plus the word→token conversion table used to map
/// fixated word indices onto token rows.
struct EncodedText {
  std::vector<std::size_t> token_ids;
  std::vector<TokenSpan> word_spans;  // one per content word, both segments
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;
  std::vector<std::string> words;     // normalized words kept after truncation
  std::size_t first_segment_words = 0;

  std::size_t length() const { return token_ids.size(); }
  std::size_t word_count() const { return word_spans.size(); }
};

/// [CLS] text1 [SEP] (text2 [SEP]). Words are segmented greedily into the
/// longest vocabulary pieces; unmatched characters become [UNK]. Over-long
/// inputs lose whole words from the end of the longer segment.
EncodedText tokenize(std::string_view text1, std::optional<std::string_view> text2,
                     const Vocab& vocab, std::size_t max_len);

/// Greedy longest-match pieces for one normalized word.
std::vector<std::size_t> segment_word(std::string_view word, const Vocab& vocab);

/// Appends [PAD] tokens (attention_mask 0) up to `length`.
EncodedText pad_to(EncodedText enc, std::size_t length);

/// Throws std::logic_error describing the first broken structural invariant.
void validate(const EncodedText& enc);

}  // namespace gazenlu::textenc
