#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gazenlu::textenc {

inline constexpr std::size_t kClsId = 0;
inline constexpr std::size_t kSepId = 1;
inline constexpr std::size_t kPadId = 2;
inline constexpr std::size_t kUnkId = 3;
inline constexpr std::size_t kMaxNgram = 8;

/// Lowercases ASCII and splits on whitespace.
std::vector<std::string> normalize_words(std::string_view text);

/// Splits a word into UTF-8 code points.
std::vector<std::string> utf8_chars(std::string_view word);

/// Subword vocabulary: four fixed specials, then characters, then the most
/// frequent in-word character n-grams (2 ≤ n ≤ 8).
class Vocab {
 public:
  static Vocab build(std::span<const std::string> corpus, std::size_t vocab_size);
  static Vocab from_tokens(std::vector<std::string> tokens);
  static Vocab from_text(std::string_view text);
  static Vocab load(const std::filesystem::path& path);

  /// One token per line; line number = id.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::span<const std::string> tokens() const { return tokens_; }
  /// Longest token length in code points; bounds the greedy match.
  std::size_t longest_token_chars() const { return longest_chars_; }

  /// Words needing more pieces than this are mapped to a single [UNK].
  std::size_t max_pieces_per_word = 16;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t longest_chars_ = 1;
};

}  // namespace gazenlu::textenc
