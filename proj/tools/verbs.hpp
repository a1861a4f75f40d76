#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazenlu/trainkit/config.hpp"

namespace gazenlu::cli {

/// Bad or missing flags discovered after parsing; exits with code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out;  // explicit run directory; otherwise GAZENLU_RUNS/<name>
  std::size_t jobs = 1;
  std::string config_path;
  std::map<std::string, std::string> overrides;  // config key -> value
  std::string command_line;
};

/// Where task data comes from. Without --data the task names a built-in
/// synthetic task (keyword, pair) regenerated from synthetic_seed.
struct TaskArgs {
  std::string task = "keyword";
  std::string data;
  std::string test;
  std::string metric;
  bool pair = false;
  std::size_t n_classes = 2;
  std::string label_range;  // "min,max" for regression tasks
  std::uint64_t synthetic_seed = 7;
  bool random_labels = false;
  std::string pretrained;  // pretrain-gaze run directory
  std::string vocab;
  std::size_t dev_size = 500;
};

struct SplitArgs {
  std::optional<std::size_t> k;
  std::uint64_t data_seed = 111;
};

struct SyntheticArgs {
  std::uint64_t seed = 7;
  std::size_t gaze_sentences = 600;
  std::size_t readers = 3;
  std::size_t keyword_instances = 3000;
  std::size_t pair_instances = 2000;
  std::size_t test_size = 500;
};

struct VocabArgs {
  std::vector<std::string> corpora;
  std::vector<std::string> datasets;
  bool pair = false;
  std::size_t size = 400;
};

struct PretrainArgs {
  std::string corpus;  // empty: the synthetic gaze corpus
  std::uint64_t synthetic_seed = 7;
  std::string vocab;
  double dev_fraction = 0.1;
};

struct GenerateArgs {
  std::string pretrained;
  std::string input;
  std::size_t samples = 1;
  std::uint64_t seed = 1;
};

struct EvaluateArgs {
  std::string run;
  std::optional<std::size_t> n_scanpaths;
};

struct ProtocolArgs {
  std::vector<std::size_t> counts{1, 3, 5, 7};
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::size_t> ks{200, 500, 1000};
  std::vector<std::uint64_t> data_seeds{111, 222, 333, 444, 555};
  std::size_t folds = 10;
};

struct ReportArgs {
  std::vector<std::string> inputs;
};

trainkit::TrainConfig resolve_config(const Common& common);

int build_vocab(const Common& common, const VocabArgs& args);
int make_synthetic(const Common& common, const SyntheticArgs& args);
int pretrain_gaze(const Common& common, const PretrainArgs& args);
int train(const Common& common, const TaskArgs& task, const SplitArgs& split);
int evaluate(const Common& common, const EvaluateArgs& args);
int generate(const Common& common, const GenerateArgs& args);
int sweep(const Common& common, const TaskArgs& task, const SplitArgs& split,
          const ProtocolArgs& protocol);
int lowresource(const Common& common, const TaskArgs& task, const ProtocolArgs& protocol);
int crossval(const Common& common, const TaskArgs& task, const ProtocolArgs& protocol);
int ablate(const Common& common, const TaskArgs& task, const SplitArgs& split,
           const ProtocolArgs& protocol);
int report(const Common& common, const ReportArgs& args);

}  // namespace gazenlu::cli
