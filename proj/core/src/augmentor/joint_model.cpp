#include "gazenlu/augmentor/joint_model.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"

namespace gazenlu::augmentor {

using diffcore::Tensor;

ScanpathEncoder ScanpathEncoder::create(const diffcore::Initializer& init, const std::string& name,
                                        std::size_t width, std::size_t hidden, double dropout) {
  ScanpathEncoder e;
  if (width != hidden) e.cls_proj_ = diffcore::Linear::create(init, name + ".cls_proj", width, hidden);
  e.gru_ = diffcore::Gru::create(init, name + ".gru", width, hidden);
  e.dropout_ = dropout;
  return e;
}

Tensor ScanpathEncoder::operator()(const ReorderedSequence& seq, const Tensor& cls,
                                   diffcore::Rng* dropout_rng) const {
  if (!seq.embeddings.defined() || seq.embeddings.rows() == 0)
    throw std::invalid_argument("scanpath encoder: empty sequence");
  const Tensor h0 = cls_proj_ ? (*cls_proj_)(cls) : cls;
  diffcore::Rng unused;
  const Tensor x = diffcore::dropout(seq.embeddings, dropout_,
                                     dropout_rng ? *dropout_rng : unused, dropout_rng != nullptr);
  const Tensor states = gru_(x, h0);
  return diffcore::slice_rows(states, states.rows() - 1, states.rows());
}

void ScanpathEncoder::collect(diffcore::ParamList& params, const std::string& name) {
  if (cls_proj_) cls_proj_->collect(params, name + ".cls_proj");
  gru_.collect(params, name + ".gru");
}

void TaskSpec::check_label(double label) const {
  if (kind == TaskKind::classification) {
    if (label < 0 || label >= static_cast<double>(n_classes) || label != std::floor(label))
      throw std::out_of_range("label " + std::to_string(label) + " is not a class in [0, " +
                              std::to_string(n_classes) + ")");
  } else if (!(label >= label_min && label <= label_max)) {
    throw std::out_of_range("label " + std::to_string(label) + " outside [" +
                            std::to_string(label_min) + ", " + std::to_string(label_max) + "]");
  }
}

TaskHead TaskHead::create(const diffcore::Initializer& init, const std::string& name,
                          std::size_t hidden, const TaskSpec& spec) {
  if (spec.kind == TaskKind::classification && spec.n_classes < 2)
    throw std::invalid_argument("task head: need at least 2 classes");
  if (spec.kind == TaskKind::regression && !(spec.label_max > spec.label_min))
    throw std::invalid_argument("task head: empty regression range");
  TaskHead h;
  h.spec_ = spec;
  h.linear_ = diffcore::Linear::create(init, name + ".linear", hidden, spec.outputs());
  return h;
}

Tensor TaskHead::operator()(const Tensor& feature) const { return linear_(feature); }

Tensor TaskHead::loss(const Tensor& output, double label) const {
  spec_.check_label(label);
  if (spec_.kind == TaskKind::classification) {
    const std::size_t target[] = {static_cast<std::size_t>(label)};
    return diffcore::cross_entropy(output, target);
  }
  const double scaled = (label - spec_.label_min) / (spec_.label_max - spec_.label_min);
  return diffcore::mse_loss(output, Tensor::scalar(scaled, output.precision()));
}

std::vector<double> TaskHead::to_prediction(std::span<const double> output) const {
  std::vector<double> out(output.begin(), output.end());
  if (spec_.kind == TaskKind::regression)
    for (double& v : out) v = spec_.label_min + v * (spec_.label_max - spec_.label_min);
  return out;
}

void TaskHead::collect(diffcore::ParamList& params, const std::string& name) {
  linear_.collect(params, name + ".linear");
}

JointModel JointModel::create(const JointConfig& config, std::uint64_t seed) {
  JointModel m;
  m.config_ = config;
  m.config_.generator.encoder = config.encoder;
  m.config_.gumbel.validate();
  const diffcore::Initializer init(seed);
  m.lm_ = textenc::TextEncoder::create(config.encoder, init, "lm");
  m.generator_ = gazegen::ScanpathGenerator::create(m.config_.generator, init, "generator");
  m.scan_encoder_ = ScanpathEncoder::create(init, "scan", config.encoder.width,
                                            config.scan_hidden, config.scan_dropout);
  m.head_ = TaskHead::create(init, "head", config.scan_hidden, config.task);
  m.set_freeze_generator(config.freeze_generator);
  return m;
}

diffcore::ParamList JointModel::parameters() {
  diffcore::ParamList p;
  lm_.collect(p, "lm");
  generator_.collect(p, "generator");
  scan_encoder_.collect(p, "scan");
  head_.collect(p, "head");
  return p;
}

diffcore::ParamList JointModel::generator_parameters() {
  diffcore::ParamList p;
  generator_.collect(p, "generator");
  return p;
}

diffcore::ParamList JointModel::pretrained_parameters() {
  diffcore::ParamList p;
  if (config_.generator.share_text_encoder) lm_.collect(p, "lm");
  generator_.collect(p, "generator");
  return p;
}

diffcore::ParamList JointModel::trainable_parameters() {
  diffcore::ParamList p;
  lm_.collect(p, "lm");
  if (!config_.freeze_generator && config_.source == ScanpathSource::generator)
    generator_.collect(p, "generator");
  scan_encoder_.collect(p, "scan");
  head_.collect(p, "head");
  return p;
}

void JointModel::set_freeze_generator(bool on) {
  config_.freeze_generator = on;
  generator_parameters().set_requires_grad(!on);
}

std::uint64_t scanpath_stream(std::uint64_t sample_seed, const std::string& instance_id,
                              std::size_t k) {
  return diffcore::derive_stream({sample_seed, diffcore::fnv1a64(instance_id), k});
}

Tensor JointModel::word_states(const textenc::EncodedText& text,
                               const textenc::TextEncoderOutput& lm_out,
                               diffcore::Rng* dropout_rng) const {
  if (config_.source == ScanpathSource::identity) return {};
  if (generator_.owns_text_encoder())
    return generator_.encode_words(generator_.encode_text(text, dropout_rng));
  return generator_.encode_words(lm_out);
}

gazegen::Scanpath JointModel::sample_path(const textenc::EncodedText& text,
                                          const Tensor& word_states, const std::string& id,
                                          std::size_t k, std::uint64_t sample_seed,
                                          bool training) const {
  const std::size_t w = text.word_count();
  if (config_.source == ScanpathSource::identity) {
    gazegen::Scanpath path;
    path.sentence_id = id;
    path.fixations.resize(w);
    std::iota(path.fixations.begin(), path.fixations.end(), 0);
    path.stopped = true;
    return path;
  }
  diffcore::Rng rng(sample_seed, scanpath_stream(sample_seed, id, k));
  gazegen::GeneratorPolicy policy(generator_, word_states);
  const std::size_t cap = gazegen::default_max_fixations(w);
  gazegen::Scanpath path = (!training && config_.gumbel.hard_eval)
                               ? gazegen::sample_hard(policy, rng, cap)
                               : gazegen::sample_gumbel(policy, rng, config_.gumbel, cap);
  path.sentence_id = id;
  return path;
}

Tensor JointModel::path_output(const textenc::TextEncoderOutput& lm_out,
                               const textenc::EncodedText& text, const gazegen::Scanpath& path,
                               diffcore::Rng* dropout_rng) const {
  ReorderedSequence seq;
  if (!path.soft_weights.defined()) {
    seq = reorder_hard(lm_out.token_embeddings, text, path.fixations);
  } else if (config_.gumbel.mode == gazegen::GumbelMode::straight_through) {
    seq = reorder_mixture(lm_out.token_embeddings, text, path.fixations, path.soft_weights);
  } else {
    seq = reorder_soft(lm_out.word_embeddings, path.soft_weights);
  }
  return head_(scan_encoder_(seq, lm_out.cls_embedding, dropout_rng));
}

Tensor JointModel::loss(std::span<const TextInstance> instances, std::span<const PairRef> pairs,
                        std::uint64_t sample_seed, diffcore::Rng& dropout_rng) const {
  if (pairs.empty()) throw std::invalid_argument("loss: empty batch");
  // Group by instance in order of first appearance.
  std::vector<std::size_t> order;
  std::map<std::size_t, std::vector<std::size_t>> paths;
  for (const PairRef& p : pairs) {
    if (p.instance >= instances.size())
      throw std::out_of_range("loss: instance " + std::to_string(p.instance) + " out of range");
    auto [it, fresh] = paths.try_emplace(p.instance);
    if (fresh) order.push_back(p.instance);
    it->second.push_back(p.scanpath);
  }
  std::vector<Tensor> terms;
  terms.reserve(pairs.size());
  for (std::size_t i : order) {
    const TextInstance& inst = instances[i];
    config_.task.check_label(inst.label);
    const textenc::TextEncoderOutput lm_out = lm_.encode(inst.text, &dropout_rng);
    const Tensor states = word_states(inst.text, lm_out, &dropout_rng);
    for (std::size_t k : paths[i]) {
      const gazegen::Scanpath path = sample_path(inst.text, states, inst.id, k, sample_seed, true);
      terms.push_back(head_.loss(path_output(lm_out, inst.text, path, &dropout_rng), inst.label));
    }
  }
  return diffcore::mean(diffcore::concat_rows(terms));
}

std::vector<double> JointModel::predict(const TextInstance& instance, std::size_t n_scanpaths,
                                        std::uint64_t sample_seed) const {
  if (n_scanpaths == 0) throw std::invalid_argument("predict: n_scanpaths must be ≥ 1");
  diffcore::NoGradGuard no_grad;
  const textenc::TextEncoderOutput lm_out = lm_.encode(instance.text);
  const Tensor states = word_states(instance.text, lm_out, nullptr);
  std::vector<std::vector<double>> outputs;
  for (std::size_t k = 0; k < n_scanpaths; ++k) {
    const gazegen::Scanpath path =
        sample_path(instance.text, states, instance.id, k, sample_seed, false);
    const Tensor out = path_output(lm_out, instance.text, path, nullptr);
    outputs.emplace_back(out.values().begin(), out.values().end());
  }
  return head_.to_prediction(average_logits(outputs));
}

std::vector<double> average_logits(std::span<const std::vector<double>> per_path) {
  if (per_path.empty()) throw std::invalid_argument("average_logits: no paths");
  std::vector<double> sum(per_path.front().size(), 0.0);
  for (const auto& v : per_path) {
    if (v.size() != sum.size()) throw std::invalid_argument("average_logits: ragged inputs");
    for (std::size_t j = 0; j < v.size(); ++j) sum[j] += v[j];
  }
  for (double& s : sum) s /= static_cast<double>(per_path.size());
  return sum;
}

}  // namespace gazenlu::augmentor
