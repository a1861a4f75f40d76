#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/diffcore/checkpoint.hpp"
#include "gazenlu/trainkit/pretrain.hpp"
#include "harness.hpp"

namespace acceptance {

using namespace gazenlu;

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

const Suite& suite() {
  static const Suite s = [] {
    Suite out;
    out.data = corpus::make_synthetic_suite(7);
    std::vector<std::string> texts;
    for (const auto& r : out.data.gaze) texts.push_back(r.text);
    for (const auto* rows : {&out.data.keyword, &out.data.pair})
      for (const auto& r : *rows) {
        texts.push_back(r.sentence1);
        if (r.sentence2) texts.push_back(*r.sentence2);
      }
    out.vocab = textenc::Vocab::build(texts, 400);
    const std::size_t test = 500;
    out.keyword_pool.assign(out.data.keyword.begin(), out.data.keyword.end() - test);
    out.keyword_test.assign(out.data.keyword.end() - test, out.data.keyword.end());
    out.pair_pool.assign(out.data.pair.begin(), out.data.pair.end() - test);
    return out;
  }();
  return s;
}

trainkit::TrainConfig tiny_config() {
  trainkit::TrainConfig cfg;
  cfg.width = 16;
  cfg.hidden = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.max_epochs = 3;
  cfg.patience = 1;
  return cfg;
}

std::string pretrained_generator(const trainkit::TrainConfig& cfg, std::size_t epochs) {
  const Suite& s = suite();
  const auto examples = trainkit::prepare_gaze_examples(s.data.gaze, s.vocab, cfg.max_len);
  const auto split = corpus::split_gaze_by_sentence(s.data.gaze, 0.1, 5);
  std::vector<trainkit::GazeExample> train, dev;
  for (std::size_t i : split.train) train.push_back(examples[i]);
  for (std::size_t i : split.dev) dev.push_back(examples[i]);
  const auto jc = trainkit::joint_config(cfg, {});
  trainkit::GazeModel model = trainkit::GazeModel::create(jc.generator, cfg.seed);
  trainkit::PretrainOptions options;
  options.epochs = epochs;
  options.lr = cfg.pretrain_lr;
  options.seed = cfg.seed;
  trainkit::pretrain_generator(model, train, dev, options);
  return diffcore::serialize_checkpoint(model.parameters());
}

}  // namespace acceptance

int main(int argc, char** argv) {
  using namespace acceptance;
  struct Criterion {
    const char* id;
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"AC1", "gradient suite", ac1_gradients},
      {"AC2", "Gumbel-max fidelity", ac2_gumbel_max},
      {"AC3", "reordering oracle", ac3_reordering},
      {"AC4", "pretraining learnability", ac4_pretraining},
      {"AC5", "joint-training learnability", ac5_joint_training},
      {"AC6", "ablation gradient contracts", ac6_ablation_contracts},
      {"AC7", "protocol reproduction", ac7_protocols},
      {"AC8", "metrics oracle", ac8_metrics},
      {"AC9", "determinism", ac9_determinism},
      {"AC10", "scanpath-count sweep", ac10_sweep},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Stopwatch clock;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    for (const std::string& line : outcome.details) std::printf("  %s %s\n", c.id, line.c_str());
    std::printf("%s %s: %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", c.id, c.title,
                clock.seconds());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
