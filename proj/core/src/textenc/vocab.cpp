#include "gazenlu/textenc/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "gazenlu/diffcore/checkpoint.hpp"

namespace gazenlu::textenc {
namespace {

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> kSpecials = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};
  return kSpecials;
}

struct Tally {
  std::size_t count = 0;
  std::size_t first_seen = 0;
};

// Frequency descending, then first occurrence.
std::vector<std::string> ranked(const std::unordered_map<std::string, Tally>& tallies) {
  std::vector<std::pair<std::string, Tally>> items(tallies.begin(), tallies.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [token, _] : items) out.push_back(std::move(token));
  return out;
}

}  // namespace

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, word.size() - i);
    chars.emplace_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

Vocab Vocab::build(std::span<const std::string> corpus, std::size_t vocab_size) {
  if (vocab_size < 5) throw std::invalid_argument("build_vocab: vocab_size must be at least 5");
  std::unordered_map<std::string, Tally> char_tally;
  std::unordered_map<std::string, Tally> gram_tally;
  std::size_t order = 0;
  bool any_word = false;
  for (const std::string& line : corpus) {
    for (const std::string& word : normalize_words(line)) {
      any_word = true;
      const auto chars = utf8_chars(word);
      for (std::size_t i = 0; i < chars.size(); ++i) {
        ++char_tally.try_emplace(chars[i], Tally{0, order}).first->second.count;
        std::string gram = chars[i];
        for (std::size_t n = 2; n <= kMaxNgram && i + n <= chars.size(); ++n) {
          gram += chars[i + n - 1];
          ++gram_tally.try_emplace(gram, Tally{0, order}).first->second.count;
        }
        ++order;
      }
    }
  }
  if (!any_word) throw std::invalid_argument("build_vocab: empty corpus");

  std::vector<std::string> tokens = special_tokens();
  const std::size_t budget = vocab_size - tokens.size();
  auto chars = ranked(char_tally);
  if (chars.size() > budget) chars.resize(budget);
  tokens.insert(tokens.end(), chars.begin(), chars.end());
  for (std::string& gram : ranked(gram_tally)) {
    if (tokens.size() >= vocab_size) break;
    tokens.push_back(std::move(gram));
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin()))
    throw std::invalid_argument("vocab: the first four tokens must be [CLS] [SEP] [PAD] [UNK]");
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], i).second)
      throw std::invalid_argument("vocab: duplicate token '" + v.tokens_[i] + "'");
    if (i >= specials.size())
      v.longest_chars_ = std::max(v.longest_chars_, utf8_chars(v.tokens_[i]).size());
  }
  return v;
}

Vocab Vocab::from_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    tokens.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  return from_text(diffcore::read_file_bytes(path));
}

std::string Vocab::to_text() const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocab::save(const std::filesystem::path& path) const {
  diffcore::write_file_bytes(path, to_text());
}

std::optional<std::size_t> Vocab::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

}  // namespace gazenlu::textenc
