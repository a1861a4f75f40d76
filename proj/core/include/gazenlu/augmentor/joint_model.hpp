#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazenlu/augmentor/reorder.hpp"
#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/diffcore/rng.hpp"
#include "gazenlu/diffcore/tensor.hpp"
#include "gazenlu/gazegen/generator.hpp"
#include "gazenlu/textenc/encoder.hpp"

namespace gazenlu::augmentor {

/// GRU over a reordered sequence; the hidden state starts from the
/// projected [CLS] vector and the last step is the feature.
class ScanpathEncoder {
 public:
  static ScanpathEncoder create(const diffcore::Initializer& init, const std::string& name,
                                std::size_t width, std::size_t hidden, double dropout = 0.1);
  /// 1×h feature. `dropout_rng` null disables input dropout.
  diffcore::Tensor operator()(const ReorderedSequence& seq, const diffcore::Tensor& cls,
                              diffcore::Rng* dropout_rng = nullptr) const;
  void collect(diffcore::ParamList& params, const std::string& name);
  std::size_t hidden() const { return gru_.hidden(); }

 private:
  std::optional<diffcore::Linear> cls_proj_;
  diffcore::Gru gru_;
  double dropout_ = 0.1;
};

enum class TaskKind : std::uint8_t { classification, regression };

struct TaskSpec {
  TaskKind kind = TaskKind::classification;
  std::size_t n_classes = 2;
  double label_min = 0.0;  // regression range, rescaled to [0, 1] for the loss
  double label_max = 1.0;

  std::size_t outputs() const { return kind == TaskKind::classification ? n_classes : 1; }
  /// Throws std::out_of_range for a label outside the task's domain.
  void check_label(double label) const;
};

class TaskHead {
 public:
  static TaskHead create(const diffcore::Initializer& init, const std::string& name,
                         std::size_t hidden, const TaskSpec& spec);
  /// 1×outputs pre-softmax logits, or a 1×1 prediction on the [0, 1] scale.
  diffcore::Tensor operator()(const diffcore::Tensor& feature) const;
  diffcore::Tensor loss(const diffcore::Tensor& output, double label) const;
  /// Output mapped back to the label scale (regression) or left as logits.
  std::vector<double> to_prediction(std::span<const double> output) const;
  void collect(diffcore::ParamList& params, const std::string& name);
  const TaskSpec& spec() const { return spec_; }

 private:
  TaskSpec spec_;
  diffcore::Linear linear_;
};

enum class ScanpathSource : std::uint8_t {
  generator,  // synthetic scanpaths from the generator
  identity,   // words in reading order; text-only baseline
};

struct JointConfig {
  textenc::EncoderConfig encoder;
  gazegen::GeneratorConfig generator;  // its encoder field mirrors `encoder`
  std::size_t scan_hidden = 128;
  double scan_dropout = 0.1;
  TaskSpec task;
  gazegen::GumbelConfig gumbel;
  ScanpathSource source = ScanpathSource::generator;
  bool freeze_generator = false;
};

struct TextInstance {
  std::string id;
  textenc::EncodedText text;
  double label = 0.0;
};

/// One (instance, scanpath) term of the training objective.
struct PairRef {
  std::size_t instance = 0;
  std::size_t scanpath = 0;
};

/// Text encoder + scanpath generator + scanpath encoder + task head.
/// Parameter tensors are held by value; ParamList views point into the
/// model, so the model must not move while a list is in use.
class JointModel {
 public:
  static JointModel create(const JointConfig& config, std::uint64_t seed);

  const JointConfig& config() const { return config_; }
  gazegen::ScanpathGenerator& generator() { return generator_; }
  const gazegen::ScanpathGenerator& generator() const { return generator_; }
  textenc::TextEncoder& text_encoder() { return lm_; }

  diffcore::ParamList parameters();
  diffcore::ParamList generator_parameters();
  /// Layout of a pretraining checkpoint: the language model too when the
  /// text encoder is shared, then the generator.
  diffcore::ParamList pretrained_parameters();
  /// Everything the optimizer updates: all parameters, minus the generator
  /// when frozen.
  diffcore::ParamList trainable_parameters();
  void set_freeze_generator(bool on);

  /// Mean loss over the given (instance, scanpath) pairs. Pairs of the same
  /// instance share one text encoding. Scanpath k of instance i is sampled
  /// from stream derive(sample_seed, fnv(id), k).
  diffcore::Tensor loss(std::span<const TextInstance> instances, std::span<const PairRef> pairs,
                        std::uint64_t sample_seed, diffcore::Rng& dropout_rng) const;

  /// Logits (or regression output on the label scale) averaged over
  /// `n_scanpaths` sampled paths, dropout off.
  std::vector<double> predict(const TextInstance& instance, std::size_t n_scanpaths,
                              std::uint64_t sample_seed) const;

  /// Pre-head single-path output used by predict; exposed for tests.
  diffcore::Tensor path_output(const textenc::TextEncoderOutput& lm_out,
                               const textenc::EncodedText& text, const gazegen::Scanpath& path,
                               diffcore::Rng* dropout_rng) const;

  /// Scanpath k for an instance, sampled the way training does (relaxed) or
  /// evaluation does (hard when gumbel.hard_eval).
  /// `word_states` may be undefined for the identity source.
  gazegen::Scanpath sample_path(const textenc::EncodedText& text,
                                const diffcore::Tensor& word_states, const std::string& id,
                                std::size_t k, std::uint64_t sample_seed, bool training) const;

  /// Generator word states for a sentence (undefined for the identity
  /// source). Uses the shared language model output when configured.
  diffcore::Tensor word_states(const textenc::EncodedText& text,
                               const textenc::TextEncoderOutput& lm_out,
                               diffcore::Rng* dropout_rng) const;

 private:
  JointConfig config_;
  textenc::TextEncoder lm_;
  gazegen::ScanpathGenerator generator_;
  ScanpathEncoder scan_encoder_;
  TaskHead head_;
};

std::uint64_t scanpath_stream(std::uint64_t sample_seed, const std::string& instance_id,
                              std::size_t k);

/// Elementwise mean of equally sized logit vectors.
std::vector<double> average_logits(std::span<const std::vector<double>> per_path);

}  // namespace gazenlu::augmentor
