#include <benchmark/benchmark.h>

#include <map>

#include "gazenlu/augmentor/joint_model.hpp"
#include "gazenlu/corpus/synthetic.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/evalkit/metrics.hpp"
#include "gazenlu/trainkit/config.hpp"
#include "gazenlu/trainkit/joint_training.hpp"

using namespace gazenlu;
using diffcore::Rng;
using diffcore::Tensor;

namespace {

Tensor random(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.normal();
  return Tensor::from_values(r, c, std::move(v));
}

struct Fixture {
  std::vector<augmentor::TextInstance> instances;
  augmentor::JointModel model;
};

Fixture& fixture(std::size_t width) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(width);
  if (it != cache.end()) return it->second;
  const auto rows = corpus::make_keyword_task(64, 1, 5, 10);
  std::vector<std::string> texts;
  for (const auto& r : rows) texts.push_back(r.sentence1);
  const auto vocab = textenc::Vocab::build(texts, 400);
  trainkit::TrainConfig cfg;
  cfg.width = width;
  cfg.hidden = width;
  const auto jc = trainkit::joint_config(cfg, trainkit::task_spec(corpus::keyword_spec()));
  return cache.emplace(width, Fixture{trainkit::make_instances(rows, vocab, cfg.max_len),
                                      augmentor::JointModel::create(jc, 1)})
      .first->second;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random(n, n, 1), b = random(n, n, 2);
  diffcore::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(diffcore::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

static void BM_Attention(benchmark::State& state) {
  const Tensor q = random(24, 64, 3), k = random(24, 64, 4), v = random(24, 64, 5);
  diffcore::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(diffcore::multi_head_attention(q, k, v, 4));
}
BENCHMARK(BM_Attention);

static void BM_JointLossBackward(benchmark::State& state) {
  Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const std::vector<augmentor::PairRef> pairs = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const auto params = f.model.parameters();
  Rng rng(1, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    params.zero_grad();
    diffcore::backward(f.model.loss(f.instances, pairs, ++seed, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_JointLossBackward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Predict(benchmark::State& state) {
  Fixture& f = fixture(32);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(f.model.predict(f.instances[i++ % f.instances.size()], n, 7));
}
BENCHMARK(BM_Predict)->Arg(1)->Arg(3)->Arg(7)->Unit(benchmark::kMicrosecond);

static void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(9, 9);
  std::vector<double> scores(n);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = i % 2;
  }
  for (auto _ : state) benchmark::DoNotOptimize(evalkit::auc(scores, labels));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
