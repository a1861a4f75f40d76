#include "gazenlu/trainkit/pretrain.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/trainkit/adamw.hpp"
#include "json.hpp"

namespace gazenlu::trainkit {

using diffcore::Tensor;

std::string to_json_line(const EpochLog& entry) {
  const nlohmann::ordered_json j = {{"epoch", entry.epoch},
                                    {"train_loss", entry.train_loss},
                                    {"dev_metric", entry.dev_metric}};
  return j.dump();
}

std::vector<GazeExample> prepare_gaze_examples(const std::vector<corpus::GazeRecord>& records,
                                               const textenc::Vocab& vocab, std::size_t max_len) {
  std::vector<GazeExample> out;
  out.reserve(records.size());
  for (const corpus::GazeRecord& r : records) {
    GazeExample ex{r.sentence_id, r.reader_id, textenc::tokenize(r.text, std::nullopt, vocab, max_len),
                   r.fixations};
    for (std::size_t f : ex.fixations)
      if (f >= ex.text.word_count())
        throw corpus::DataError("record " + r.sentence_id + "/" + r.reader_id + ": fixation " +
                                std::to_string(f) + " lost to truncation at max_len " +
                                std::to_string(max_len));
    out.push_back(std::move(ex));
  }
  return out;
}

GazeModel GazeModel::create(const gazegen::GeneratorConfig& config, std::uint64_t seed) {
  const diffcore::Initializer init(seed);
  GazeModel m;
  if (config.share_text_encoder) m.shared_lm_ = textenc::TextEncoder::create(config.encoder, init, "lm");
  m.generator_ = gazegen::ScanpathGenerator::create(config, init, "generator");
  return m;
}

Tensor GazeModel::word_states(const textenc::EncodedText& text, diffcore::Rng* dropout_rng) const {
  const textenc::TextEncoderOutput out = shared_lm_ ? shared_lm_->encode(text, dropout_rng)
                                                    : generator_.encode_text(text, dropout_rng);
  return generator_.encode_words(out);
}

Tensor GazeModel::nll(const GazeExample& example, diffcore::Rng* dropout_rng) const {
  return generator_.nll(word_states(example.text, dropout_rng), example.fixations);
}

diffcore::ParamList GazeModel::parameters() {
  diffcore::ParamList p;
  if (shared_lm_) shared_lm_->collect(p, "lm");
  generator_.collect(p, "generator");
  return p;
}

double mean_step_nll(const GazeModel& model, std::span<const GazeExample> examples) {
  diffcore::NoGradGuard no_grad;
  double total = 0;
  std::size_t steps = 0;
  for (const GazeExample& ex : examples) {
    const std::size_t n = ex.fixations.size() + 1;
    total += model.nll(ex, nullptr).item() * static_cast<double>(n);
    steps += n;
  }
  return steps == 0 ? 0.0 : total / static_cast<double>(steps);
}

PretrainResult pretrain_generator(GazeModel& model, std::span<const GazeExample> train,
                                  std::span<const GazeExample> dev, const PretrainOptions& options,
                                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw std::invalid_argument("pretrain_generator: empty training corpus");
  if (options.batch_size == 0) throw std::invalid_argument("pretrain_generator: batch_size is 0");
  const diffcore::ParamList params = model.parameters();
  params.set_requires_grad(true);
  AdamW optimizer(params, {options.lr, 0.9, 0.999, 1e-8, options.weight_decay});
  const std::span<const GazeExample> monitor = dev.empty() ? train : dev;

  PretrainResult result;
  result.best_dev_nll = mean_step_nll(model, monitor);
  auto best = params.snapshot();
  std::size_t stale = 0;
  diffcore::Rng dropout_rng(options.seed, diffcore::fnv1a64("pretrain-dropout"));
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto order = corpus::shuffled_indices(
        train.size(), diffcore::derive_stream({options.seed, diffcore::fnv1a64("pretrain"), epoch}));
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      params.zero_grad();
      std::vector<Tensor> terms;
      for (std::size_t i = start; i < end; ++i)
        terms.push_back(model.nll(train[order[i]], &dropout_rng));
      const Tensor loss = diffcore::mean(diffcore::concat_rows(terms));
      diffcore::backward(loss);
      optimizer.step();
      loss_sum += loss.item() * static_cast<double>(end - start);
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(train.size()),
                   mean_step_nll(model, monitor)};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.dev_metric < result.best_dev_nll - 1e-6) {
      result.best_dev_nll = entry.dev_metric;
      result.best_epoch = epoch;
      best = params.snapshot();
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }
  params.restore(best);
  params.zero_grad();
  return result;
}

}  // namespace gazenlu::trainkit
