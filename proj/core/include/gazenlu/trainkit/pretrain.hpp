#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazenlu/corpus/tsv.hpp"
#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/gazegen/generator.hpp"
#include "gazenlu/textenc/tokenizer.hpp"

namespace gazenlu::trainkit {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
};
std::string to_json_line(const EpochLog& entry);

struct GazeExample {
  std::string sentence_id;
  std::string reader_id;
  textenc::EncodedText text;
  std::vector<std::size_t> fixations;
};

/// Tokenizes every record; throws corpus::DataError when truncation to
/// max_len would drop a fixated word.
std::vector<GazeExample> prepare_gaze_examples(const std::vector<corpus::GazeRecord>& records,
                                               const textenc::Vocab& vocab, std::size_t max_len);

/// The generator as trained on reading data. With a shared text encoder
/// the language model ("lm") is trained alongside it.
class GazeModel {
 public:
  static GazeModel create(const gazegen::GeneratorConfig& config, std::uint64_t seed);

  gazegen::ScanpathGenerator& generator() { return generator_; }
  const gazegen::ScanpathGenerator& generator() const { return generator_; }
  diffcore::Tensor word_states(const textenc::EncodedText& text, diffcore::Rng* dropout_rng) const;
  diffcore::Tensor nll(const GazeExample& example, diffcore::Rng* dropout_rng) const;
  /// Checkpoint layout: [lm.*] generator.*
  diffcore::ParamList parameters();

 private:
  std::optional<textenc::TextEncoder> shared_lm_;
  gazegen::ScanpathGenerator generator_;
};

/// Step-weighted mean teacher-forced NLL (nats per decoding step).
double mean_step_nll(const GazeModel& model, std::span<const GazeExample> examples);

struct PretrainOptions {
  std::size_t epochs = 20;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::size_t batch_size = 32;
  std::size_t patience = 3;
  std::uint64_t seed = 42;
};

struct PretrainResult {
  std::vector<EpochLog> log;  // dev_metric holds dev NLL
  std::size_t best_epoch = 0;  // 0: the initialization
  double best_dev_nll = 0.0;
};

/// Minimizes teacher-forced NLL; the parameters end at the best-dev epoch.
PretrainResult pretrain_generator(GazeModel& model, std::span<const GazeExample> train,
                                  std::span<const GazeExample> dev, const PretrainOptions& options,
                                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace gazenlu::trainkit
