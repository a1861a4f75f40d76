#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gazenlu/corpus/tsv.hpp"

namespace gazenlu::corpus {

inline constexpr std::size_t kLowResourceDevSize = 1000;
inline constexpr std::uint64_t kDataSeeds[] = {111, 222, 333, 444, 555};

/// Fisher–Yates permutation of [0, n) driven by `seed`.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// Fold id per instance: a shuffled order cut into contiguous chunks; the
/// first n % folds folds get one extra member.
std::vector<std::size_t> kfold(std::size_t n, std::size_t folds, std::uint64_t seed);
/// Instance indices of each fold, ascending.
std::vector<std::vector<std::size_t>> fold_members(const std::vector<std::size_t>& assignment,
                                                   std::size_t folds);

struct LowResourceSplit {
  std::size_t k = 0;
  std::uint64_t data_seed = 0;
  std::vector<std::size_t> train;  // indices into the original training set
  std::vector<std::size_t> dev;    // the next min(1000, rest) after train
};

/// Shuffle with data_seed; first K train, next min(dev_size, rest) dev. The
/// test set is the original development set and is not part of the split.
LowResourceSplit low_resource_split(std::size_t n, std::size_t k, std::uint64_t data_seed,
                                    std::size_t dev_size = kLowResourceDevSize);

/// JSON audit record of a split.
std::string split_manifest_json(const LowResourceSplit& split);
/// Record indices split by sentence, so that every reader of a sentence
/// lands on the same side. At least one sentence goes to each side when
/// there are two or more.
struct GazeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
};
GazeSplit split_gaze_by_sentence(const std::vector<GazeRecord>& records, double dev_fraction,
                                 std::uint64_t seed);

std::string kfold_manifest_json(const std::vector<std::size_t>& assignment, std::size_t folds,
                                std::uint64_t seed);

}  // namespace gazenlu::corpus
