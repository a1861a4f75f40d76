#include <cmath>

#include "doctest.h"
#include "gazenlu/corpus/synthetic.hpp"
#include "gazenlu/diffcore/layers.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/trainkit/adamw.hpp"
#include "gazenlu/trainkit/config.hpp"
#include "gazenlu/trainkit/joint_training.hpp"
#include "gazenlu/trainkit/pretrain.hpp"

using namespace gazenlu;
using namespace gazenlu::trainkit;
using diffcore::Tensor;

TEST_CASE("AdamW matches a hand-rolled reference over several steps") {
  Tensor w = Tensor::from_values(1, 3, {0.5, -1.0, 2.0}, diffcore::Precision::f64);
  w.set_requires_grad(true);
  diffcore::ParamList params;
  params.add("w", w);
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.05;
  AdamW opt(params, cfg);

  std::vector<double> p = {0.5, -1.0, 2.0}, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 5; ++t) {
    opt.zero_grad();
    diffcore::backward(diffcore::sum(diffcore::mul(w, w)));  // grad 2w
    opt.step();
    for (std::size_t i = 0; i < 3; ++i) {
      const double g = 2 * p[i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      p[i] -= cfg.lr * (mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * p[i]);
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK(w(0, i) == doctest::Approx(p[i]).epsilon(1e-12));
  }
  CHECK(opt.steps(0) == 5);
}

TEST_CASE("AdamW skips parameters without gradient") {
  Tensor a = Tensor::from_values(1, 1, {1.0}, diffcore::Precision::f64);
  Tensor b = Tensor::from_values(1, 1, {1.0}, diffcore::Precision::f64);
  diffcore::ParamList params;
  params.add("a", a);
  params.add("b", b);
  params.set_requires_grad(true);
  AdamW opt(params, {});
  opt.zero_grad();
  diffcore::backward(diffcore::sum(a));
  opt.step();
  CHECK(a.item() != 1.0);
  CHECK(b.item() == 1.0);
  CHECK(opt.steps(1) == 0);
}

TEST_CASE("AdamW rejects non-finite gradients before updating") {
  Tensor a = Tensor::from_values(1, 1, {1.0}, diffcore::Precision::f64);
  diffcore::ParamList params;
  params.add("a", a);
  params.set_requires_grad(true);
  AdamW opt(params, {});
  diffcore::backward(diffcore::scale(diffcore::sum(a), std::numeric_limits<double>::infinity()));
  CHECK_THROWS_AS(opt.step(), std::domain_error);
  CHECK(a.item() == 1.0);
}

TEST_CASE("early stopping counts stale epochs") {
  EarlyStopping es(2);
  CHECK_FALSE(es.update(1, 0.5));
  CHECK(es.improved());
  CHECK_FALSE(es.update(2, 0.5));  // tie is not an improvement
  CHECK_FALSE(es.improved());
  CHECK_FALSE(es.update(3, 0.7));
  CHECK_FALSE(es.update(4, 0.6));
  CHECK(es.update(5, 0.69));
  CHECK(es.best_epoch() == 3);
  CHECK(es.best_metric() == 0.7);
}

TEST_CASE("learning-rate selection breaks ties toward the smallest rate") {
  const double grid[] = {5e-5, 4e-5, 3e-5, 2e-5};
  const double dev1[] = {0.8, 0.9, 0.85, 0.7};
  CHECK(select_best_lr(grid, dev1) == 1);
  const double dev2[] = {0.9, 0.9, 0.8, 0.9};
  CHECK(select_best_lr(grid, dev2) == 3);
  CHECK(select_lr(grid, [](double lr) { return lr == 3e-5 ? 1.0 : 0.0; }) == 3e-5);
}

TEST_CASE("config key=value round trip") {
  TrainConfig cfg;
  cfg.lr = 3e-5;
  cfg.width = 32;
  cfg.gumbel_mode = "soft_convolution";
  cfg.share_text_encoder = true;
  const std::string text = to_key_values(cfg);
  CHECK(text.find("lr=3e-05") != std::string::npos);
  TrainConfig back;
  apply_key_values(back, parse_key_values(text, "mem"));
  CHECK(to_key_values(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  back.seed = 43;
  CHECK(config_hash(back) != config_hash(cfg));
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  TrainConfig cfg;
  CHECK_THROWS_AS(apply_key_values(cfg, {{"nope", "1"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_key_values(cfg, {{"width", "wide"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_key_values(cfg, {{"freeze_generator", "maybe"}}), std::invalid_argument);
  const auto kv = parse_key_values("# comment\n\nlr = 0.5\n", "mem");
  CHECK(kv.at("lr") == "0.5");
  cfg.heads = 5;  // width 64 not divisible
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("joint_config maps fields") {
  TrainConfig cfg;
  cfg.width = 32;
  cfg.hidden = 24;
  cfg.temperature = 0.7;
  cfg.freeze_generator = true;
  cfg.source = "identity";
  const auto jc = joint_config(cfg, {});
  CHECK(jc.encoder.width == 32);
  CHECK(jc.generator.encoder.width == 32);
  CHECK(jc.generator.hidden == 24);
  CHECK(jc.scan_hidden == 24);
  CHECK(jc.gumbel.temperature == 0.7);
  CHECK(jc.freeze_generator);
  CHECK(jc.source == augmentor::ScanpathSource::identity);
}

TEST_CASE("epoch log JSON line") {
  CHECK(to_json_line({2, 0.5, 0.75}) == R"({"epoch":2,"train_loss":0.5,"dev_metric":0.75})");
}

TEST_CASE("gaze examples reject truncation that drops a fixated word") {
  std::vector<corpus::GazeRecord> records = {{"s", "r", "aa bb cc dd ee ff gg hh", {0, 7}}};
  const std::vector<std::string> corpus = {"aa bb cc dd ee ff gg hh"};
  const auto vocab = textenc::Vocab::build(corpus, 30);
  CHECK_NOTHROW(prepare_gaze_examples(records, vocab, 64));
  CHECK_THROWS_AS(prepare_gaze_examples(records, vocab, 6), corpus::DataError);
}

TEST_CASE("pretraining lowers dev NLL and ends at the best epoch") {
  corpus::SyntheticConfig sc;
  sc.gaze_sentences = 60;
  const auto gaze = corpus::make_gaze_corpus(2, sc);
  std::vector<std::string> texts;
  for (const auto& r : gaze) texts.push_back(r.text);
  const auto vocab = textenc::Vocab::build(texts, 200);
  const auto examples = prepare_gaze_examples(gaze, vocab, 64);
  const std::vector<GazeExample> train(examples.begin(), examples.begin() + 150);
  const std::vector<GazeExample> dev(examples.begin() + 150, examples.end());
  TrainConfig cfg;
  cfg.width = 16;
  cfg.hidden = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.vocab_size = vocab.size();
  GazeModel model = GazeModel::create(joint_config(cfg, {}).generator, 1);
  const double before = mean_step_nll(model, dev);
  PretrainOptions opt;
  opt.epochs = 3;
  const auto result = pretrain_generator(model, train, dev, opt);
  CHECK(result.log.size() <= 3);
  CHECK(mean_step_nll(model, dev) == doctest::Approx(result.best_dev_nll));
  CHECK(result.best_dev_nll < before);
}

TEST_CASE("joint training is reproducible") {
  const auto rows = corpus::make_keyword_task(40, 1, 5, 8);
  std::vector<std::string> texts;
  for (const auto& r : rows) texts.push_back(r.sentence1);
  const auto vocab = textenc::Vocab::build(texts, 100);
  const auto instances = make_instances(rows, vocab, 64);
  TrainConfig cfg;
  cfg.width = 8;
  cfg.hidden = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.vocab_size = vocab.size();
  cfg.max_epochs = 2;
  cfg.n_scanpaths = 2;
  const auto jc = joint_config(cfg, task_spec(corpus::keyword_spec()));
  std::string first;
  for (int round = 0; round < 2; ++round) {
    augmentor::JointModel model = augmentor::JointModel::create(jc, cfg.seed);
    std::size_t calls = 0;
    const auto result = train_joint(model, instances, cfg, [&](const augmentor::JointModel&) {
      return static_cast<double>(++calls);
    });
    CHECK(result.log.size() == 2);
    CHECK(result.best_epoch == 2);
    std::string dump;
    for (const auto& e : result.log) dump += to_json_line(e);
    if (round == 0) first = dump;
    else CHECK(dump == first);
  }
}
