#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazenlu/augmentor/joint_model.hpp"
#include "gazenlu/corpus/tsv.hpp"
#include "gazenlu/evalkit/metrics.hpp"
#include "gazenlu/evalkit/report.hpp"
#include "gazenlu/trainkit/config.hpp"
#include "gazenlu/trainkit/pretrain.hpp"

namespace gazenlu::evalkit {

/// One training run of a protocol. Indices refer to the task's training
/// pool; an empty `test` means the task's held-out test set.
struct RunRequest {
  std::string label;
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
  trainkit::TrainConfig config;
};

struct RunOutcome {
  MetricValue test;
  std::size_t best_epoch = 0;
  std::vector<trainkit::EpochLog> log;
  std::string checkpoint;  // serialized joint model after training
  std::uint64_t generator_hash_before = 0;
  std::uint64_t generator_hash_after = 0;
};

using RunFn = std::function<RunOutcome(const RunRequest&)>;

/// Runs requests with up to `jobs` worker threads; results keep request
/// order. The first exception is rethrown after all workers finish.
std::vector<RunOutcome> execute_runs(const std::vector<RunRequest>& requests, const RunFn& run,
                                     std::size_t jobs = 1);

/// Fold i is the test fold and fold (i+1) mod folds the dev fold; the rest
/// train. Folds come from kfold(pool_size, folds, config.seed).
std::vector<RunRequest> crossval_requests(std::size_t pool_size, const trainkit::TrainConfig& config,
                                          std::size_t folds = 10);
EvalReport run_crossval(std::size_t pool_size, const trainkit::TrainConfig& config,
                        const std::string& task, corpus::MetricId metric, const RunFn& run,
                        std::size_t folds = 10, std::size_t jobs = 1);

/// One report per K, aggregated over data seeds; test is the held-out set.
std::vector<EvalReport> run_lowresource(std::size_t pool_size, std::span<const std::size_t> ks,
                                        std::span<const std::uint64_t> data_seeds,
                                        const trainkit::TrainConfig& config,
                                        const std::string& task, corpus::MetricId metric,
                                        const RunFn& run, std::size_t jobs = 1);

using EvaluateFn = std::function<EvalReport(const trainkit::TrainConfig&)>;

/// One evaluation per scanpath count (training and evaluation counts
/// coupled).
ReportSet sweep_scanpaths(std::span<const std::size_t> counts, const trainkit::TrainConfig& config,
                          const EvaluateFn& evaluate);

/// full, frozen and scratch generator configurations under identical
/// seeds and splits.
ReportSet run_ablations(const trainkit::TrainConfig& config, const EvaluateFn& evaluate);

struct TaskData {
  corpus::DatasetSpec spec;
  std::vector<augmentor::TextInstance> pool;
  std::vector<augmentor::TextInstance> test;
};

/// Outputs (logits, or regression values on the label scale) averaged over
/// n scanpaths per instance.
std::vector<std::vector<double>> predict_all(const augmentor::JointModel& model,
                                             std::span<const augmentor::TextInstance> instances,
                                             std::size_t n_scanpaths, std::uint64_t sample_seed);
MetricValue evaluate_model(const augmentor::JointModel& model,
                           std::span<const augmentor::TextInstance> instances,
                           corpus::MetricId metric, std::size_t n_scanpaths,
                           std::uint64_t sample_seed);

/// Evaluation-time sampling seed for a configuration.
std::uint64_t eval_sample_seed(const trainkit::TrainConfig& config);

struct TrainerOptions {
  /// Pretraining checkpoint bytes, applied when config.pretrained_generator.
  std::optional<std::string> pretrained_checkpoint;
  std::function<void(const RunRequest&, const trainkit::EpochLog&)> on_epoch;
};

/// Builds the joint model, trains it on the request's split and scores the
/// test instances.
RunFn make_training_run(const TaskData& data, TrainerOptions options = {});

std::map<std::string, std::string> config_echo(const trainkit::TrainConfig& config);

}  // namespace gazenlu::evalkit
