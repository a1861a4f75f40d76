#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gazenlu/augmentor/joint_model.hpp"
#include "gazenlu/augmentor/reorder.hpp"
#include "gazenlu/diffcore/gradcheck.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/textenc/tokenizer.hpp"

using namespace gazenlu;
using namespace gazenlu::augmentor;
using diffcore::Rng;
using diffcore::Tensor;

namespace {

const textenc::Vocab& vocab() {
  static const textenc::Vocab v = [] {
    const std::vector<std::string> corpus = {"red green blue yellow purple orange black white"};
    return textenc::Vocab::build(corpus, 40);
  }();
  return v;
}

JointConfig small_config(ScanpathSource source = ScanpathSource::generator) {
  JointConfig cfg;
  cfg.encoder.vocab_size = vocab().size();
  cfg.encoder.width = 8;
  cfg.encoder.layers = 1;
  cfg.encoder.heads = 2;
  cfg.encoder.dropout = 0.0;
  cfg.generator.encoder = cfg.encoder;
  cfg.generator.hidden = 8;
  cfg.generator.max_offset_len = 8;
  cfg.scan_hidden = 8;
  cfg.scan_dropout = 0.0;
  cfg.source = source;
  return cfg;
}

TextInstance instance(const std::string& id, const std::string& text, double label) {
  return {id, textenc::tokenize(text, std::nullopt, vocab(), 64), label};
}

Tensor random_tokens(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal();
  return Tensor::from_values(rows, cols, v, diffcore::Precision::f64);
}

}  // namespace

TEST_CASE("hard reordering gathers each fixated word's tokens") {
  const auto enc = textenc::tokenize("purple red orange", std::nullopt, vocab(), 64);
  Rng rng(1, 1);
  const Tensor tokens = random_tokens(rng, enc.length(), 3);
  const std::vector<std::size_t> path = {2, 0, 2};
  const auto seq = reorder_hard(tokens, enc, path);
  std::size_t expected_rows = 0;
  for (std::size_t w : path) expected_rows += enc.word_spans[w].second - enc.word_spans[w].first;
  REQUIRE(seq.embeddings.rows() == expected_rows);
  REQUIRE(seq.source_map.size() == expected_rows);
  for (std::size_t r = 0; r < expected_rows; ++r) {
    const auto& src = seq.source_map[r];
    CHECK(src.word == path[src.step]);
    CHECK(src.token >= enc.word_spans[src.word].first);
    CHECK(src.token < enc.word_spans[src.word].second);
    for (std::size_t c = 0; c < 3; ++c) CHECK(seq.embeddings(r, c) == tokens(src.token, c));
  }
}

TEST_CASE("property: one-hot mixture equals gather bit for bit") {
  Rng rng(2, 2);
  const std::vector<std::string> words = {"red", "green", "blue", "yellow", "purple", "orange"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + words[rng.below(words.size())];
    const auto enc = textenc::tokenize(text, std::nullopt, vocab(), 64);
    const Tensor tokens = random_tokens(rng, enc.length(), 4);
    std::vector<std::size_t> path(1 + rng.below(8));
    for (auto& p : path) p = rng.below(n);
    std::vector<double> w(path.size() * n, 0.0);
    for (std::size_t i = 0; i < path.size(); ++i) w[i * n + path[i]] = 1.0;
    const auto hard = reorder_hard(tokens, enc, path);
    const auto mixed = reorder_mixture(tokens, enc, path, Tensor::from_values(path.size(), n, w));
    REQUIRE(hard.embeddings.size() == mixed.embeddings.size());
    CHECK(std::memcmp(hard.embeddings.values().data(), mixed.embeddings.values().data(),
                      hard.embeddings.size() * sizeof(double)) == 0);
    CHECK(hard.source_map == mixed.source_map);
  }
}

TEST_CASE("mixture reordering routes gradient to the soft weights") {
  const auto enc = textenc::tokenize("red blue green", std::nullopt, vocab(), 64);
  Rng rng(3, 3);
  std::vector<Tensor> inputs = {random_tokens(rng, 2, 3)};
  const Tensor tokens = random_tokens(rng, enc.length(), 4);
  const Tensor probe = random_tokens(rng, 64, 4);
  const std::vector<std::size_t> path = {1, 2};
  const auto report = diffcore::gradcheck(
      [&] {
        const auto seq = reorder_mixture(tokens, enc, path, diffcore::softmax(inputs[0]));
        return diffcore::sum(diffcore::mul(seq.embeddings, diffcore::slice_rows(probe, 0, seq.embeddings.rows())));
      },
      inputs);
  CHECK(report.passed);
}

TEST_CASE("soft reordering is a weighted sum of word embeddings") {
  Rng rng(4, 4);
  const Tensor words = random_tokens(rng, 3, 2);
  const Tensor weights = Tensor::from_values(2, 3, {0.5, 0.5, 0.0, 0.0, 0.25, 0.75}, diffcore::Precision::f64);
  const auto seq = reorder_soft(words, weights);
  REQUIRE(seq.embeddings.rows() == 2);
  CHECK(seq.embeddings(0, 1) == doctest::Approx(0.5 * words(0, 1) + 0.5 * words(1, 1)));
  CHECK(seq.embeddings(1, 0) == doctest::Approx(0.25 * words(1, 0) + 0.75 * words(2, 0)));
}

TEST_CASE("average_logits") {
  const std::vector<std::vector<double>> v = {{1, 2}, {3, 4}};
  CHECK(average_logits(v) == std::vector<double>{2, 3});
  CHECK_THROWS(average_logits(std::vector<std::vector<double>>{}));
  CHECK_THROWS(average_logits(std::vector<std::vector<double>>{{1}, {1, 2}}));
}

TEST_CASE("scanpath streams differ by instance and index") {
  CHECK(scanpath_stream(1, "a", 0) != scanpath_stream(1, "a", 1));
  CHECK(scanpath_stream(1, "a", 0) != scanpath_stream(1, "b", 0));
  CHECK(scanpath_stream(1, "a", 0) != scanpath_stream(2, "a", 0));
  CHECK(scanpath_stream(1, "a", 0) == scanpath_stream(1, "a", 0));
}

TEST_CASE("parameter groups") {
  JointModel model = JointModel::create(small_config(), 1);
  const std::size_t all = model.parameters().scalar_count();
  const std::size_t gen = model.generator_parameters().scalar_count();
  CHECK(gen > 0);
  CHECK(model.trainable_parameters().scalar_count() == all);
  model.set_freeze_generator(true);
  CHECK(model.trainable_parameters().scalar_count() == all - gen);
  const auto generator = model.generator_parameters();
  for (const auto& e : generator.entries()) CHECK(e.name.rfind("generator.", 0) == 0);
}

TEST_CASE("prediction is deterministic and averages per-path outputs") {
  const JointModel model = JointModel::create(small_config(), 2);
  const TextInstance inst = instance("x1", "red green blue yellow", 1);
  const auto a = model.predict(inst, 3, 9);
  CHECK(a == model.predict(inst, 3, 9));
  CHECK(a.size() == 2);
  CHECK_THROWS(model.predict(inst, 0, 9));
}

TEST_CASE("identity source reads words in order") {
  const JointModel model = JointModel::create(small_config(ScanpathSource::identity), 2);
  const auto enc = textenc::tokenize("red green blue", std::nullopt, vocab(), 64);
  const auto path = model.sample_path(enc, Tensor(), "id", 0, 1, false);
  CHECK(path.fixations == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("training loss is finite and differentiable") {
  JointModel model = JointModel::create(small_config(), 3);
  const std::vector<TextInstance> batch = {instance("a", "red green", 0), instance("b", "blue yellow purple", 1)};
  const std::vector<PairRef> pairs = {{0, 0}, {1, 0}, {1, 1}};
  Rng rng(1, 1);
  const auto params = model.parameters();
  params.zero_grad();
  const Tensor loss = model.loss(batch, pairs, 5, rng);
  CHECK(std::isfinite(loss.item()));
  diffcore::backward(loss);
  bool generator_grad = false;
  const auto generator = model.generator_parameters();
  for (const auto& e : generator.entries())
    if (e.tensor->has_grad())
      for (double g : e.tensor->grad()) generator_grad |= g != 0.0;
  CHECK(generator_grad);
}

TEST_CASE("task head: regression maps back to the label scale") {
  TaskSpec spec;
  spec.kind = TaskKind::regression;
  spec.label_min = 1.0;
  spec.label_max = 5.0;
  const TaskHead head = TaskHead::create(diffcore::Initializer(1), "head", 4, spec);
  const std::vector<double> out = {0.25};
  CHECK(head.to_prediction(out)[0] == doctest::Approx(2.0));
  CHECK_THROWS_AS(spec.check_label(6.0), std::out_of_range);
  TaskSpec cls;
  CHECK_THROWS_AS(cls.check_label(2.0), std::out_of_range);
  CHECK_NOTHROW(cls.check_label(1.0));
}
