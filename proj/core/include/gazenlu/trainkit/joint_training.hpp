#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gazenlu/augmentor/joint_model.hpp"
#include "gazenlu/corpus/tsv.hpp"
#include "gazenlu/textenc/vocab.hpp"
#include "gazenlu/trainkit/config.hpp"
#include "gazenlu/trainkit/pretrain.hpp"

namespace gazenlu::trainkit {

/// Stops after `patience` consecutive epochs without strict improvement
/// (by more than `tolerance`) over the best dev metric so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience, double tolerance = 1e-6);
  /// Records an epoch; returns true when training should stop.
  bool update(std::size_t epoch, double metric);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  std::size_t patience_;
  double tolerance_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  bool improved_ = false;
};

using DevMetricFn = std::function<double(const augmentor::JointModel&)>;

struct JointTrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_dev_metric = 0.0;
  std::size_t trainable_scalars = 0;
  std::size_t frozen_scalars = 0;
  /// Whether any generator gradient was nonzero after the first backward.
  bool generator_grad_on_first_step = false;
};

/// Joint fine-tuning over shuffled (instance, scanpath) pairs with AdamW,
/// early stopping on `dev_metric`, and the best-dev parameters restored at
/// the end. The optimizer holds exactly model.trainable_parameters().
JointTrainResult train_joint(augmentor::JointModel& model,
                             std::span<const augmentor::TextInstance> train,
                             const TrainConfig& config, const DevMetricFn& dev_metric,
                             const std::function<void(const EpochLog&)>& on_epoch = {});

/// Grid index of the best dev metric; ties (within 1e-6) go to the smallest
/// learning rate.
std::size_t select_best_lr(std::span<const double> grid, std::span<const double> dev_metrics);
/// Runs `train_and_score(lr)` for each grid value and applies the rule.
double select_lr(std::span<const double> grid, const std::function<double(double)>& train_and_score);

inline constexpr double kPaperLrGrid[] = {5e-5, 4e-5, 3e-5, 2e-5};

/// Tokenized instances for a task.
std::vector<augmentor::TextInstance> make_instances(const std::vector<corpus::DatasetRow>& rows,
                                                    const textenc::Vocab& vocab,
                                                    std::size_t max_len);
augmentor::TaskSpec task_spec(const corpus::DatasetSpec& spec);

}  // namespace gazenlu::trainkit
