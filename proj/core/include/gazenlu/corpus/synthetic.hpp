#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gazenlu/corpus/tsv.hpp"
#include "gazenlu/diffcore/rng.hpp"

namespace gazenlu::corpus {

/// Sentinel for the terminating STOP outcome.
inline constexpr std::ptrdiff_t kStopOutcome = -1000;

/// First-order saccade process over word positions. The first fixation is
/// always word 0. From word i the reader moves +1, +2 or -1 with the given
/// probabilities; -1 is impossible at word 0 and the rest renormalizes;
/// a move landing past the last word ends the path (STOP).
struct MarkovSaccadeModel {
  double p_forward = 0.6;
  double p_skip = 0.25;
  double p_regress = 0.15;

  void validate() const;
  /// Entropy of (p_forward, p_skip, p_regress) in nats.
  double move_entropy() const;
  /// Outcomes (next word index, or kStopOutcome) with probabilities, for
  /// the step after `current` (-1 = before the first fixation).
  std::vector<std::pair<std::ptrdiff_t, double>> step_distribution(std::ptrdiff_t current,
                                                                   std::size_t words) const;
  /// Gold path; resampled if it exceeds `max_len` fixations.
  std::vector<std::size_t> sample(std::size_t words, diffcore::Rng& rng,
                                  std::size_t max_len) const;
  /// Exact negative log-likelihood of a path (including STOP) and its step
  /// count; the per-step mean over held-out data is the achievable floor.
  std::pair<double, std::size_t> path_nll(const std::vector<std::size_t>& fixations,
                                          std::size_t words) const;
};

struct SyntheticConfig {
  std::size_t gaze_sentences = 600;
  std::size_t readers = 3;
  std::size_t min_words = 5;
  std::size_t max_words = 10;
  MarkovSaccadeModel saccades;
  std::size_t keyword_instances = 3000;
  std::size_t pair_instances = 2000;
};

struct SyntheticSuite {
  std::vector<GazeRecord> gaze;
  std::vector<DatasetRow> keyword;
  std::vector<DatasetRow> pair;
};

/// Filler vocabulary of pronounceable nonsense words, deterministic.
const std::vector<std::string>& filler_words();
/// The planted keyword; never used as filler.
const std::string& planted_keyword();
/// Tokens planted in the pair task; never used as filler.
const std::vector<std::string>& pair_markers();

std::vector<GazeRecord> make_gaze_corpus(std::uint64_t seed, const SyntheticConfig& cfg);
/// Label 1 iff the sentence contains the keyword; exactly floor(n/2)
/// positives.
std::vector<DatasetRow> make_keyword_task(std::size_t n, std::uint64_t seed,
                                          std::size_t min_words, std::size_t max_words);
/// Label 1 iff segment 2's marker equals segment 1's; exactly floor(n/2)
/// positives.
std::vector<DatasetRow> make_pair_task(std::size_t n, std::uint64_t seed, std::size_t min_words,
                                       std::size_t max_words);
/// Same rows with labels replaced by fair coin flips (negative control).
std::vector<DatasetRow> randomize_labels(std::vector<DatasetRow> rows, std::uint64_t seed);

SyntheticSuite make_synthetic_suite(std::uint64_t seed, const SyntheticConfig& cfg = {});

DatasetSpec keyword_spec();
DatasetSpec pair_spec();

}  // namespace gazenlu::corpus
