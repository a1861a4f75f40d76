#include "gazenlu/corpus/splits.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gazenlu/diffcore/rng.hpp"
#include "json.hpp"

namespace gazenlu::corpus {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  diffcore::Rng rng(seed, diffcore::fnv1a64("shuffle"));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

std::vector<std::size_t> kfold(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("kfold: need at least 2 folds");
  if (n < folds)
    throw std::invalid_argument("kfold: " + std::to_string(n) + " instances cannot fill " +
                                std::to_string(folds) + " folds");
  const auto order = shuffled_indices(n, seed);
  std::vector<std::size_t> assignment(n);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) assignment[order[pos++]] = f;
  }
  return assignment;
}

std::vector<std::vector<std::size_t>> fold_members(const std::vector<std::size_t>& assignment,
                                                   std::size_t folds) {
  std::vector<std::vector<std::size_t>> members(folds);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= folds) throw std::out_of_range("fold_members: fold id out of range");
    members[assignment[i]].push_back(i);
  }
  return members;
}

LowResourceSplit low_resource_split(std::size_t n, std::size_t k, std::uint64_t data_seed,
                                    std::size_t dev_size) {
  if (k == 0) throw std::invalid_argument("low_resource_split: K must be positive");
  if (n < k + 1)
    throw std::invalid_argument("low_resource_split: " + std::to_string(n) +
                                " instances leave no dev set for K=" + std::to_string(k));
  const auto order = shuffled_indices(n, data_seed);
  LowResourceSplit s;
  s.k = k;
  s.data_seed = data_seed;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  const std::size_t dev = std::min(dev_size, n - k);
  s.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(k),
               order.begin() + static_cast<std::ptrdiff_t>(k + dev));
  return s;
}

std::string split_manifest_json(const LowResourceSplit& split) {
  const nlohmann::json j = {{"k", split.k},
                            {"data_seed", split.data_seed},
                            {"train", split.train},
                            {"dev", split.dev}};
  return j.dump(1) + "\n";
}

std::string kfold_manifest_json(const std::vector<std::size_t>& assignment, std::size_t folds,
                                std::uint64_t seed) {
  const nlohmann::json j = {{"folds", folds},
                            {"seed", seed},
                            {"members", fold_members(assignment, folds)}};
  return j.dump(1) + "\n";
}

GazeSplit split_gaze_by_sentence(const std::vector<GazeRecord>& records, double dev_fraction,
                                 std::uint64_t seed) {
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0))
    throw std::invalid_argument("split_gaze_by_sentence: dev_fraction must be in [0, 1)");
  std::vector<std::string> sentences;
  std::map<std::string, std::size_t> index;
  for (const GazeRecord& r : records)
    if (index.emplace(r.sentence_id, sentences.size()).second) sentences.push_back(r.sentence_id);
  const std::size_t n = sentences.size();
  std::size_t n_dev = static_cast<std::size_t>(dev_fraction * static_cast<double>(n));
  if (n >= 2 && dev_fraction > 0.0) n_dev = std::clamp<std::size_t>(n_dev, 1, n - 1);
  std::vector<bool> is_dev(n, false);
  const auto order = shuffled_indices(n, seed);
  for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
  GazeSplit split;
  for (std::size_t i = 0; i < records.size(); ++i)
    (is_dev[index.at(records[i].sentence_id)] ? split.dev : split.train).push_back(i);
  return split;
}

}  // namespace gazenlu::corpus
