#include "gazenlu/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace gazenlu::corpus {

void MarkovSaccadeModel::validate() const {
  const double total = p_forward + p_skip + p_regress;
  if (p_forward < 0 || p_skip < 0 || p_regress < 0 || std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("markov saccade model: probabilities must be ≥ 0 and sum to 1");
  if (p_forward + p_skip <= 0)
    throw std::invalid_argument("markov saccade model: paths would never end");
}

double MarkovSaccadeModel::move_entropy() const {
  double h = 0;
  for (double p : {p_forward, p_skip, p_regress})
    if (p > 0) h -= p * std::log(p);
  return h;
}

std::vector<std::pair<std::ptrdiff_t, double>> MarkovSaccadeModel::step_distribution(
    std::ptrdiff_t current, std::size_t words) const {
  const auto w = static_cast<std::ptrdiff_t>(words);
  if (words == 0 || current < -1 || current >= w)
    throw std::out_of_range("step_distribution: position outside sentence");
  if (current == -1) return {{0, 1.0}};
  std::vector<std::pair<std::ptrdiff_t, double>> out;
  auto add = [&out, w](std::ptrdiff_t land, double p) {
    if (p <= 0) return;
    const std::ptrdiff_t key = land >= w ? kStopOutcome : land;
    for (auto& [k, q] : out)
      if (k == key) {
        q += p;
        return;
      }
    out.emplace_back(key, p);
  };
  const double norm = current == 0 ? p_forward + p_skip : 1.0;
  add(current + 1, p_forward / norm);
  add(current + 2, p_skip / norm);
  if (current > 0) add(current - 1, p_regress);
  return out;
}

std::vector<std::size_t> MarkovSaccadeModel::sample(std::size_t words, diffcore::Rng& rng,
                                                    std::size_t max_len) const {
  while (true) {
    std::vector<std::size_t> path;
    std::ptrdiff_t current = -1;
    while (path.size() <= max_len) {
      const auto dist = step_distribution(current, words);
      double u = rng.uniform();
      std::ptrdiff_t next = dist.back().first;
      for (const auto& [k, p] : dist) {
        if (u < p) {
          next = k;
          break;
        }
        u -= p;
      }
      if (next == kStopOutcome) return path;
      path.push_back(static_cast<std::size_t>(next));
      current = next;
    }
  }
}

std::pair<double, std::size_t> MarkovSaccadeModel::path_nll(
    const std::vector<std::size_t>& fixations, std::size_t words) const {
  double nll = 0;
  std::ptrdiff_t current = -1;
  for (std::size_t t = 0; t <= fixations.size(); ++t) {
    const std::ptrdiff_t next =
        t < fixations.size() ? static_cast<std::ptrdiff_t>(fixations[t]) : kStopOutcome;
    double p = 0;
    for (const auto& [k, q] : step_distribution(current, words))
      if (k == next) p = q;
    if (p <= 0) return {std::numeric_limits<double>::infinity(), fixations.size() + 1};
    nll -= std::log(p);
    current = next;
  }
  return {nll, fixations.size() + 1};
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> kWords = [] {
    const std::string consonants = "bdfgklmnprstv";
    const std::string vowels = "aeiou";
    std::vector<std::string> syllables;
    for (char c : consonants)
      for (char v : vowels) syllables.push_back({c, v});
    diffcore::Rng rng(7, diffcore::fnv1a64("filler"));
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < 200) {
      std::string w = syllables[rng.below(syllables.size())];
      const std::size_t extra = 1 + rng.below(2);
      for (std::size_t i = 0; i < extra; ++i) w += syllables[rng.below(syllables.size())];
      if (seen.insert(w).second) words.push_back(std::move(w));
    }
    return words;
  }();
  return kWords;
}

const std::string& planted_keyword() {
  static const std::string kKeyword = "zyxwq";
  return kKeyword;
}

const std::vector<std::string>& pair_markers() {
  static const std::vector<std::string> kMarkers = {"qwy", "xjz", "hyc", "wqx"};
  return kMarkers;
}

namespace {

std::vector<std::string> filler_sentence(diffcore::Rng& rng, std::size_t min_words,
                                         std::size_t max_words) {
  if (min_words == 0 || max_words < min_words)
    throw std::invalid_argument("synthetic: bad word-count range");
  const std::size_t n = min_words + rng.below(max_words - min_words + 1);
  const auto& pool = filler_words();
  std::vector<std::string> words(n);
  for (auto& w : words) w = pool[rng.below(pool.size())];
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::vector<double> balanced_labels(std::size_t n, diffcore::Rng& rng) {
  std::vector<double> labels(n, 0.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 1.0);
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
  return labels;
}

}  // namespace

std::vector<GazeRecord> make_gaze_corpus(std::uint64_t seed, const SyntheticConfig& cfg) {
  cfg.saccades.validate();
  diffcore::Rng text_rng(seed, diffcore::fnv1a64("gaze-text"));
  diffcore::Rng path_rng(seed, diffcore::fnv1a64("gaze-paths"));
  std::vector<GazeRecord> records;
  for (std::size_t s = 0; s < cfg.gaze_sentences; ++s) {
    const auto words = filler_sentence(text_rng, cfg.min_words, cfg.max_words);
    const std::string text = join(words);
    for (std::size_t r = 0; r < cfg.readers; ++r) {
      records.push_back({"s" + std::to_string(s), "r" + std::to_string(r), text,
                         cfg.saccades.sample(words.size(), path_rng, 3 * words.size())});
    }
  }
  return records;
}

std::vector<DatasetRow> make_keyword_task(std::size_t n, std::uint64_t seed,
                                          std::size_t min_words, std::size_t max_words) {
  diffcore::Rng rng(seed, diffcore::fnv1a64("keyword"));
  const auto labels = balanced_labels(n, rng);
  std::vector<DatasetRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto words = filler_sentence(rng, min_words, max_words);
    if (labels[i] == 1.0) words[rng.below(words.size())] = planted_keyword();
    rows.push_back({"kw-" + std::to_string(i), join(words), std::nullopt, labels[i]});
  }
  return rows;
}

std::vector<DatasetRow> make_pair_task(std::size_t n, std::uint64_t seed, std::size_t min_words,
                                       std::size_t max_words) {
  diffcore::Rng rng(seed, diffcore::fnv1a64("pair"));
  const auto labels = balanced_labels(n, rng);
  const auto& markers = pair_markers();
  std::vector<DatasetRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto first = filler_sentence(rng, min_words, max_words);
    auto second = filler_sentence(rng, min_words, max_words);
    const std::size_t m1 = rng.below(markers.size());
    std::size_t m2 = m1;
    if (labels[i] == 0.0) m2 = (m1 + 1 + rng.below(markers.size() - 1)) % markers.size();
    first[rng.below(first.size())] = markers[m1];
    second[rng.below(second.size())] = markers[m2];
    rows.push_back({"pair-" + std::to_string(i), join(first), join(second), labels[i]});
  }
  return rows;
}

std::vector<DatasetRow> randomize_labels(std::vector<DatasetRow> rows, std::uint64_t seed) {
  diffcore::Rng rng(seed, diffcore::fnv1a64("random-labels"));
  for (auto& r : rows) r.label = static_cast<double>(rng.below(2));
  return rows;
}

SyntheticSuite make_synthetic_suite(std::uint64_t seed, const SyntheticConfig& cfg) {
  SyntheticSuite suite;
  suite.gaze = make_gaze_corpus(seed, cfg);
  suite.keyword = make_keyword_task(cfg.keyword_instances, seed, cfg.min_words, cfg.max_words);
  suite.pair = make_pair_task(cfg.pair_instances, seed, cfg.min_words, cfg.max_words);
  return suite;
}

DatasetSpec keyword_spec() {
  DatasetSpec s;
  s.task = "keyword";
  s.metric = MetricId::accuracy;
  return s;
}

DatasetSpec pair_spec() {
  DatasetSpec s;
  s.task = "pair";
  s.pair = true;
  s.metric = MetricId::f1;
  return s;
}

}  // namespace gazenlu::corpus
