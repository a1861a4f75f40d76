#include "gazenlu/trainkit/joint_training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/trainkit/adamw.hpp"

namespace gazenlu::trainkit {

using diffcore::Tensor;

EarlyStopping::EarlyStopping(std::size_t patience, double tolerance)
    : patience_(patience), tolerance_(tolerance) {
  if (patience == 0) throw std::invalid_argument("early stopping: patience must be ≥ 1");
}

bool EarlyStopping::update(std::size_t epoch, double metric) {
  improved_ = metric > best_ + tolerance_;
  if (improved_) {
    best_ = metric;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  return ++stale_ >= patience_;
}

JointTrainResult train_joint(augmentor::JointModel& model,
                             std::span<const augmentor::TextInstance> train,
                             const TrainConfig& config, const DevMetricFn& dev_metric,
                             const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("train_joint: empty training set");
  const diffcore::ParamList all = model.parameters();
  const diffcore::ParamList trainable = model.trainable_parameters();
  const diffcore::ParamList generator = model.generator_parameters();
  AdamW optimizer(trainable, {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});

  JointTrainResult result;
  result.trainable_scalars = trainable.scalar_count();
  result.frozen_scalars = all.scalar_count() - trainable.scalar_count();

  std::vector<augmentor::PairRef> pairs;
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t k = 0; k < config.n_scanpaths; ++k) pairs.push_back({i, k});

  diffcore::Rng dropout_rng(config.seed, diffcore::fnv1a64("joint-dropout"));
  EarlyStopping stopper(config.patience);
  auto best = all.snapshot();
  bool first_step = true;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::uint64_t epoch_stream =
        diffcore::derive_stream({config.seed, diffcore::fnv1a64("joint-epoch"), epoch});
    const auto order = corpus::shuffled_indices(pairs.size(), epoch_stream);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<augmentor::PairRef> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      all.zero_grad();
      const Tensor loss = model.loss(train, batch, epoch_stream, dropout_rng);
      diffcore::backward(loss);
      if (first_step) {
        for (const auto& e : generator.entries())
          for (double g : e.tensor->grad()) result.generator_grad_on_first_step |= g != 0.0;
        first_step = false;
      }
      optimizer.step();
      loss_sum += loss.item() * static_cast<double>(end - start);
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(pairs.size()), dev_metric(model)};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    const bool stop = stopper.update(epoch, entry.dev_metric);
    if (stopper.improved()) best = all.snapshot();
    if (stop) break;
  }
  all.restore(best);
  all.zero_grad();
  result.best_epoch = stopper.best_epoch();
  result.best_dev_metric = stopper.best_epoch() == 0 ? 0.0 : stopper.best_metric();
  return result;
}

std::size_t select_best_lr(std::span<const double> grid, std::span<const double> dev_metrics) {
  if (grid.empty()) throw std::invalid_argument("select_lr: empty grid");
  if (grid.size() != dev_metrics.size())
    throw std::invalid_argument("select_lr: one dev metric per grid value required");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = dev_metrics[i] - dev_metrics[best];
    if (d > 1e-6 || (std::fabs(d) <= 1e-6 && grid[i] < grid[best])) best = i;
  }
  return best;
}

double select_lr(std::span<const double> grid, const std::function<double(double)>& train_and_score) {
  std::vector<double> metrics;
  for (double lr : grid) metrics.push_back(train_and_score(lr));
  return grid[select_best_lr(grid, metrics)];
}

std::vector<augmentor::TextInstance> make_instances(const std::vector<corpus::DatasetRow>& rows,
                                                    const textenc::Vocab& vocab,
                                                    std::size_t max_len) {
  std::vector<augmentor::TextInstance> out;
  out.reserve(rows.size());
  for (const corpus::DatasetRow& r : rows) {
    std::optional<std::string_view> second;
    if (r.sentence2) second = *r.sentence2;
    out.push_back({r.id, textenc::tokenize(r.sentence1, second, vocab, max_len), r.label});
  }
  return out;
}

augmentor::TaskSpec task_spec(const corpus::DatasetSpec& spec) {
  augmentor::TaskSpec t;
  if (spec.label_kind == corpus::LabelKind::classes) {
    t.kind = augmentor::TaskKind::classification;
    t.n_classes = spec.n_classes;
  } else {
    t.kind = augmentor::TaskKind::regression;
    t.label_min = spec.label_min;
    t.label_max = spec.label_max;
  }
  return t;
}

}  // namespace gazenlu::trainkit
