#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "gazenlu/augmentor/joint_model.hpp"
#include "gazenlu/augmentor/reorder.hpp"
#include "gazenlu/diffcore/gradcheck.hpp"
#include "gazenlu/diffcore/ops.hpp"
#include "gazenlu/evalkit/metrics.hpp"
#include "gazenlu/gazegen/sampling.hpp"
#include "gazenlu/textenc/tokenizer.hpp"
#include "gazenlu/trainkit/joint_training.hpp"
#include "harness.hpp"

namespace acceptance {

using namespace gazenlu;
using diffcore::Precision;
using diffcore::Rng;
using diffcore::Tensor;

namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = scale * rng.normal();
  return Tensor::from_values(r, c, std::move(v), Precision::f64);
}

// Values bounded away from zero, for ops with a kink there.
Tensor away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  std::vector<double> v(r * c);
  for (double& x : v) {
    x = rng.normal();
    if (std::fabs(x) < 1e-2) x = x < 0 ? -0.5 : 0.5;
  }
  return Tensor::from_values(r, c, std::move(v), Precision::f64);
}

// Reduces an op output to a scalar with fixed random weights.
Tensor probe(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed, 99);
  return diffcore::sum(diffcore::mul(out, random_tensor(rng, out.rows(), out.cols())));
}

textenc::EncodedText random_sentence(Rng& rng, std::size_t words) {
  const auto& filler = corpus::filler_words();
  std::string text;
  for (std::size_t i = 0; i < words; ++i)
    text += (i ? " " : "") + filler[rng.below(filler.size())];
  return textenc::tokenize(text, std::nullopt, suite().vocab, 64);
}

struct OpCheck {
  const char* name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  std::function<Tensor(const std::vector<Tensor>&)> fn;
};

std::vector<OpCheck> op_checks() {
  using namespace diffcore;
  std::vector<OpCheck> c;
  c.push_back({"matmul", [](Rng& r) { return std::vector{random_tensor(r, 3, 4), random_tensor(r, 4, 5)}; },
               [](const auto& x) { return matmul(x[0], x[1]); }});
  c.push_back({"transpose", [](Rng& r) { return std::vector{random_tensor(r, 3, 4)}; },
               [](const auto& x) { return transpose(x[0]); }});
  c.push_back({"add", [](Rng& r) { return std::vector{random_tensor(r, 3, 4), random_tensor(r, 1, 4)}; },
               [](const auto& x) { return add(x[0], x[1]); }});
  c.push_back({"sub", [](Rng& r) { return std::vector{random_tensor(r, 3, 4), random_tensor(r, 3, 4)}; },
               [](const auto& x) { return sub(x[0], x[1]); }});
  c.push_back({"mul", [](Rng& r) { return std::vector{random_tensor(r, 3, 4), random_tensor(r, 1, 1)}; },
               [](const auto& x) { return mul(x[0], x[1]); }});
  c.push_back({"scale", [](Rng& r) { return std::vector{random_tensor(r, 2, 3)}; },
               [](const auto& x) { return scale(x[0], -1.7); }});
  c.push_back({"tanh", [](Rng& r) { return std::vector{random_tensor(r, 2, 5)}; },
               [](const auto& x) { return diffcore::tanh(x[0]); }});
  c.push_back({"sigmoid", [](Rng& r) { return std::vector{random_tensor(r, 2, 5)}; },
               [](const auto& x) { return sigmoid(x[0]); }});
  c.push_back({"relu", [](Rng& r) { return std::vector{away_from_zero(r, 2, 5)}; },
               [](const auto& x) { return relu(x[0]); }});
  c.push_back({"gelu", [](Rng& r) { return std::vector{random_tensor(r, 2, 5)}; },
               [](const auto& x) { return gelu(x[0]); }});
  c.push_back({"softmax", [](Rng& r) { return std::vector{random_tensor(r, 3, 6)}; },
               [](const auto& x) {
                 const Tensor mask = Tensor::from_values(1, 6, {0, kMaskedLogit, 0, 0, 0, kMaskedLogit});
                 return softmax(x[0], mask);
               }});
  c.push_back({"log_softmax", [](Rng& r) { return std::vector{random_tensor(r, 3, 6)}; },
               [](const auto& x) {
                 const Tensor mask = Tensor::from_values(1, 6, {0, 0, kMaskedLogit, 0, 0, 0});
                 // The masked column sits near -1e9; finite differences there are all rounding.
                 const std::ptrdiff_t kept[] = {0, 1, 3, 4, 5};
                 return select_cols(log_softmax(x[0], mask), kept);
               }});
  c.push_back({"layer_norm",
               [](Rng& r) {
                 return std::vector{random_tensor(r, 3, 6), random_tensor(r, 1, 6), random_tensor(r, 1, 6)};
               },
               [](const auto& x) { return layer_norm(x[0], x[1], x[2]); }});
  c.push_back({"gather_rows", [](Rng& r) { return std::vector{random_tensor(r, 5, 3)}; },
               [](const auto& x) {
                 const std::size_t ids[] = {4, 0, 4, 2};
                 return gather_rows(x[0], ids);
               }});
  c.push_back({"select_cols", [](Rng& r) { return std::vector{random_tensor(r, 2, 5)}; },
               [](const auto& x) {
                 const std::ptrdiff_t cols[] = {3, -1, 0, 3};
                 return select_cols(x[0], cols);
               }});
  c.push_back({"concat_rows", [](Rng& r) { return std::vector{random_tensor(r, 2, 3), random_tensor(r, 1, 3)}; },
               [](const auto& x) { return concat_rows(std::span<const Tensor>(x)); }});
  c.push_back({"concat_cols", [](Rng& r) { return std::vector{random_tensor(r, 2, 3), random_tensor(r, 2, 2)}; },
               [](const auto& x) { return concat_cols(std::span<const Tensor>(x)); }});
  c.push_back({"slice_rows", [](Rng& r) { return std::vector{random_tensor(r, 5, 3)}; },
               [](const auto& x) { return slice_rows(x[0], 1, 4); }});
  c.push_back({"slice_cols", [](Rng& r) { return std::vector{random_tensor(r, 3, 5)}; },
               [](const auto& x) { return slice_cols(x[0], 2, 5); }});
  c.push_back({"segment_mean", [](Rng& r) { return std::vector{random_tensor(r, 6, 3)}; },
               [](const auto& x) {
                 const Span spans[] = {{0, 2}, {2, 3}, {3, 6}};
                 return segment_mean(x[0], spans);
               }});
  c.push_back({"dropout", [](Rng& r) { return std::vector{random_tensor(r, 4, 4)}; },
               [](const auto& x) {
                 Rng mask_rng(3, 3);
                 return dropout(x[0], 0.3, mask_rng, true);
               }});
  c.push_back({"cross_entropy", [](Rng& r) { return std::vector{random_tensor(r, 3, 5)}; },
               [](const auto& x) {
                 const std::size_t targets[] = {0, 3, 4};
                 const Tensor mask = Tensor::from_values(1, 5, {0, 0, kMaskedLogit, 0, 0});
                 return cross_entropy(x[0], targets, mask);
               }});
  c.push_back({"mse_loss", [](Rng& r) { return std::vector{random_tensor(r, 2, 3), random_tensor(r, 2, 3)}; },
               [](const auto& x) { return mse_loss(x[0], x[1]); }});
  c.push_back({"sum", [](Rng& r) { return std::vector{random_tensor(r, 3, 3)}; },
               [](const auto& x) { return diffcore::sum(diffcore::mul(x[0], x[0])); }});
  c.push_back({"mean", [](Rng& r) { return std::vector{random_tensor(r, 3, 3)}; },
               [](const auto& x) { return diffcore::mean(diffcore::mul(x[0], x[0])); }});
  c.push_back({"straight_through", [](Rng& r) { return std::vector{random_tensor(r, 1, 6)}; },
               [](const auto& x) { return straight_through(softmax(x[0]), 2, true); }});
  c.push_back({"gru",
               [](Rng& r) {
                 return std::vector{random_tensor(r, 4, 3), random_tensor(r, 1, 2, 0.5),
                                    random_tensor(r, 3, 6, 0.5), random_tensor(r, 2, 6, 0.5),
                                    random_tensor(r, 1, 6, 0.5), random_tensor(r, 1, 6, 0.5)};
               },
               [](const auto& x) { return gru(x[0], x[1], x[2], x[3], x[4], x[5]); }});
  c.push_back({"multi_head_attention",
               [](Rng& r) {
                 return std::vector{random_tensor(r, 3, 4), random_tensor(r, 5, 4), random_tensor(r, 5, 4)};
               },
               [](const auto& x) {
                 const Tensor mask = Tensor::from_values(1, 5, {0, 0, 0, kMaskedLogit, 0});
                 return multi_head_attention(x[0], x[1], x[2], 2, mask);
               }});
  c.push_back({"soft_convolution_step",
               [](Rng& r) { return std::vector{random_tensor(r, 1, 6), random_tensor(r, 1, 10)}; },
               [](const auto& x) {
                 const gazegen::OffsetLayout layout(5);
                 return gazegen::soft_convolution_step(softmax(x[0]), softmax(x[1]), layout, 6);
               }});
  c.push_back({"mixture_matrix", [](Rng& r) { return std::vector{random_tensor(r, 3, 7)}; },
               [](const auto& x) {
                 Rng sentence_rng(11, 0);
                 static const textenc::EncodedText enc = random_sentence(sentence_rng, 7);
                 const std::vector<std::size_t> fixations = {0, 3, 6};
                 return augmentor::mixture_matrix(enc, fixations, softmax(x[0]));
               }});
  return c;
}

double max_rel(const diffcore::GradcheckReport& r) {
  return r.failure.empty() ? r.max_rel_error : std::numeric_limits<double>::infinity();
}

}  // namespace

Outcome ac1_gradients() {
  Outcome out;
  Stopwatch clock;
  const std::size_t seeds = 100;
  diffcore::GradcheckOptions op_options;
  op_options.step = 1e-5;
  op_options.tolerance = 1e-5;

  for (const OpCheck& check : op_checks()) {
    double worst = 0;
    std::size_t failed = 0;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      Rng rng(seed, diffcore::fnv1a64(check.name));
      std::vector<Tensor> inputs = check.inputs(rng);
      const auto report = diffcore::gradcheck(
          [&] { return probe(check.fn(inputs), seed); }, inputs, op_options);
      worst = std::max(worst, max_rel(report));
      failed += report.passed ? 0 : 1;
    }
    out.require(failed == 0 && worst < 1e-5,
                fmt("%-22s max rel err %.2e over %zu seeds", check.name, worst, seeds));
  }

  // Joint surrogate path: text encoder, generator, relaxed sampling,
  // mixture reorder, scanpath encoder and head, all in float64.
  trainkit::TrainConfig cfg = tiny_config();
  cfg.width = 8;
  cfg.hidden = 8;
  cfg.dropout = 0.0;
  auto jc = trainkit::joint_config(cfg, trainkit::task_spec(corpus::keyword_spec()));
  jc.gumbel.surrogate = true;
  diffcore::GradcheckOptions e2e;
  e2e.step = 1e-5;
  e2e.tolerance = 1e-3;
  e2e.max_coordinates = 6;
  double worst = 0;
  std::size_t failed = 0;
  const auto& pool = suite().keyword_pool;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    augmentor::JointModel model = augmentor::JointModel::create(jc, seed);
    const diffcore::ParamList params = model.parameters();
    params.convert(Precision::f64);
    std::vector<augmentor::TextInstance> batch =
        trainkit::make_instances({pool[seed % pool.size()], pool[(seed * 7 + 3) % pool.size()]},
                                 suite().vocab, cfg.max_len);
    const std::vector<augmentor::PairRef> pairs = {{0, 0}, {1, 0}, {1, 1}};
    std::vector<Tensor> inputs;
    const auto entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); i += std::max<std::size_t>(1, entries.size() / 8))
      inputs.push_back(*entries[i].tensor);
    inputs.push_back(*entries.back().tensor);
    e2e.coordinate_seed = seed;
    const auto report = diffcore::gradcheck(
        [&] {
          Rng dropout_rng(seed, 1);
          return model.loss(batch, pairs, seed, dropout_rng);
        },
        inputs, e2e);
    worst = std::max(worst, max_rel(report));
    failed += report.passed ? 0 : 1;
  }
  out.require(failed == 0 && worst < 1e-3,
              fmt("joint surrogate path     max rel err %.2e over %zu seeds", worst, seeds));
  out.require(clock.seconds() < 120, fmt("runtime %.1f s < 120 s", clock.seconds()));
  return out;
}

Outcome ac2_gumbel_max() {
  Outcome out;
  Stopwatch clock;
  const double logits3[] = {2.0, 0.0, -1.0};
  const double expected_paper[] = {0.8438, 0.1142, 0.0420};
  double z = 0;
  for (double l : logits3) z += std::exp(l);
  double analytic[3];
  for (int i = 0; i < 3; ++i) analytic[i] = std::exp(logits3[i]) / z;
  bool matches_constants = true;
  for (int i = 0; i < 3; ++i) matches_constants &= std::fabs(analytic[i] - expected_paper[i]) < 5e-5;
  out.require(matches_constants, fmt("analytic softmax [%.4f, %.4f, %.4f]", analytic[0], analytic[1],
                                     analytic[2]));

  // Three valid classes among the offset classes: from the virtual start
  // of a three-word sentence only offsets +1, +2, +3 are allowed.
  const gazegen::OffsetLayout layout(16);
  const auto valid = layout.valid_mask(gazegen::kVirtualStart, 3);
  std::vector<std::size_t> valid_classes;
  for (std::size_t c = 0; c < valid.size(); ++c)
    if (valid[c]) valid_classes.push_back(c);
  out.require(valid_classes.size() == 3, fmt("%zu valid classes", valid_classes.size()));
  if (valid_classes.size() != 3) return out;

  Rng noise(5, 5);
  std::vector<double> row(layout.num_classes());
  for (double& x : row) x = 10.0 * noise.normal();  // masked anyway
  for (int i = 0; i < 3; ++i) row[valid_classes[static_cast<std::size_t>(i)]] = logits3[i];
  const Tensor logits = Tensor::from_values(1, row.size(), row);

  const std::size_t draws = 100000;
  std::map<std::size_t, std::size_t> counts;
  Rng rng(2024, 0);
  bool one_hot = true;
  for (std::size_t i = 0; i < draws; ++i) {
    const gazegen::GumbelDraw d = gazegen::gumbel_softmax_sample(logits, valid, 0.5, rng);
    const Tensor st = diffcore::straight_through(d.relaxed, d.hard);
    const auto v = st.values();
    const auto hot = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    one_hot &= v[hot] == 1.0 && std::accumulate(v.begin(), v.end(), 0.0) == 1.0;
    ++counts[hot];
  }
  out.require(one_hot, "straight-through forward values are one-hot");
  double chi2 = 0;
  bool within = counts.size() <= 3;
  std::string freq;
  for (int i = 0; i < 3; ++i) {
    const double observed = static_cast<double>(counts[valid_classes[static_cast<std::size_t>(i)]]);
    const double f = observed / static_cast<double>(draws);
    within &= std::fabs(f - analytic[i]) <= 0.005;
    const double e = analytic[i] * static_cast<double>(draws);
    chi2 += (observed - e) * (observed - e) / e;
    freq += fmt("%s%.4f", i ? ", " : "", f);
  }
  out.require(within, "frequencies [" + freq + "] within ±0.005, no invalid class drawn");
  const double critical = 9.2103;  // chi-square, 2 dof, alpha 0.01
  out.require(chi2 < critical, fmt("chi2 %.3f < %.4f", chi2, critical));
  out.require(clock.seconds() < 30, fmt("runtime %.1f s < 30 s", clock.seconds()));
  return out;
}

Outcome ac3_reordering() {
  Outcome out;
  const std::size_t fixtures = 1000;
  std::size_t gather_mismatch = 0, map_mismatch = 0, conv_mismatch = 0;
  const gazegen::OffsetLayout layout(16);
  for (std::uint64_t f = 0; f < fixtures; ++f) {
    Rng rng(f, 77);
    const std::size_t words = 1 + rng.below(12);
    const textenc::EncodedText enc = random_sentence(rng, words);
    const std::size_t w = enc.word_count();
    const std::size_t n_fix = 1 + rng.below(2 * w);
    std::vector<std::size_t> path;
    for (std::size_t i = 0; i < n_fix; ++i) path.push_back(rng.below(w));

    std::vector<double> tok(enc.length() * 8);
    for (double& x : tok) x = rng.normal();
    const Tensor tokens = Tensor::from_values(enc.length(), 8, tok);
    std::vector<double> onehot(n_fix * w, 0.0);
    for (std::size_t i = 0; i < n_fix; ++i) onehot[i * w + path[i]] = 1.0;
    const Tensor weights = Tensor::from_values(n_fix, w, onehot);

    const auto hard = augmentor::reorder_hard(tokens, enc, path);
    const auto mixed = augmentor::reorder_mixture(tokens, enc, path, weights);
    const auto a = hard.embeddings.values(), b = mixed.embeddings.values();
    if (a.size() != b.size() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0)
      ++gather_mismatch;
    if (!(hard.source_map == mixed.source_map)) ++map_mismatch;

    // Delta offsets through the soft convolution land exactly on the path.
    Tensor previous;
    std::ptrdiff_t current = gazegen::kVirtualStart;
    for (std::size_t p : path) {
      const auto cls = layout.class_of(static_cast<std::ptrdiff_t>(p) - current);
      if (!cls) {
        ++conv_mismatch;
        break;
      }
      std::vector<double> probs(layout.num_classes(), 0.0);
      probs[*cls] = 1.0;
      previous = gazegen::soft_convolution_step(previous, Tensor::from_values(1, probs.size(), probs),
                                                layout, w);
      bool exact = previous.cols() == w;
      for (std::size_t j = 0; exact && j < w; ++j) exact = previous(0, j) == (j == p ? 1.0 : 0.0);
      if (!exact) {
        ++conv_mismatch;
        break;
      }
      current = static_cast<std::ptrdiff_t>(p);
    }
  }
  out.require(gather_mismatch == 0,
              fmt("mixture reorder == gather bit-exactly on %zu fixtures (%zu mismatches)", fixtures,
                  gather_mismatch));
  out.require(map_mismatch == 0, fmt("source maps agree (%zu mismatches)", map_mismatch));
  out.require(conv_mismatch == 0,
              fmt("soft convolution of delta offsets reproduces the path (%zu mismatches)", conv_mismatch));
  return out;
}

namespace {

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double u : v) {
      less += u < v[i];
      equal += u == v[i];
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

}  // namespace

Outcome ac8_metrics() {
  Outcome out;
  const std::size_t trials = 1000;
  double worst[5] = {0, 0, 0, 0, 0};
  std::size_t auc_undefined_ok = 0, auc_undefined = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Rng rng(t, 8);
    const std::size_t n = 2 + rng.below(19);
    std::vector<std::size_t> pred(n), gold(n);
    std::vector<double> x(n), y(n), scores(n), predf(n), goldf(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.below(2);
      gold[i] = rng.below(2);
      predf[i] = static_cast<double>(pred[i]);
      goldf[i] = static_cast<double>(gold[i]);
      x[i] = static_cast<double>(rng.below(6));  // ties on purpose
      y[i] = rng.normal();
      scores[i] = static_cast<double>(rng.below(5)) / 4.0;
    }
    double hits = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      hits += pred[i] == gold[i];
      tp += pred[i] == 1 && gold[i] == 1;
      fp += pred[i] == 1 && gold[i] == 0;
      fn += pred[i] == 0 && gold[i] == 1;
    }
    const double acc = hits / static_cast<double>(n);
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = tp == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
    worst[0] = std::max(worst[0], std::fabs(evalkit::accuracy(pred, gold) - acc));
    worst[1] = std::max(worst[1], std::fabs(evalkit::f1(pred, gold) - f1));
    worst[2] = std::max(worst[2], std::fabs(evalkit::matthews(pred, gold) - oracle_pearson(predf, goldf)));
    worst[3] = std::max(worst[3],
                        std::fabs(evalkit::spearman(x, y) - oracle_pearson(oracle_ranks(x), oracle_ranks(y))));
    double pos = 0, neg = 0, credit = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (gold[i] == 1 && gold[j] == 0) credit += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    for (std::size_t g : gold) (g ? pos : neg) += 1;
    if (pos == 0 || neg == 0) {
      ++auc_undefined;
      try {
        evalkit::auc(scores, gold);
      } catch (const evalkit::MetricUndefined&) {
        ++auc_undefined_ok;
      }
    } else {
      worst[4] = std::max(worst[4], std::fabs(evalkit::auc(scores, gold) - credit / (pos * neg)));
    }
  }
  const char* names[] = {"accuracy", "f1", "matthews", "spearman", "auc"};
  for (int i = 0; i < 5; ++i)
    out.require(worst[i] < 1e-9, fmt("%-9s max |diff| vs brute force %.1e over %zu vectors", names[i],
                                     worst[i], trials));
  out.require(auc_undefined_ok == auc_undefined,
              fmt("single-class AUC flagged undefined (%zu/%zu)", auc_undefined_ok, auc_undefined));

  const std::vector<std::size_t> p1 = {1, 1, 0, 0}, g1 = {1, 0, 1, 0};
  out.require(evalkit::matthews(p1, g1) == 0.0 && std::fabs(evalkit::f1(p1, g1) - 0.5) < 1e-12,
              "TP=FP=FN=TN=1: Matthews 0, F1 0.5");
  const std::vector<double> s2 = {0.1, 0.4, 0.35, 0.8};
  const std::vector<std::size_t> g2 = {0, 0, 1, 1};
  out.require(std::fabs(evalkit::auc(s2, g2) - 0.75) < 1e-12, "AUC fixture = 0.75");
  const std::vector<std::size_t> perfect = {1, 0, 1, 1, 0};
  const std::vector<double> perfect_scores = {0.9, 0.1, 0.8, 0.7, 0.2};
  out.require(evalkit::accuracy(perfect, perfect) == 1.0 && evalkit::f1(perfect, perfect) == 1.0 &&
                  evalkit::matthews(perfect, perfect) == 1.0 &&
                  evalkit::auc(perfect_scores, perfect) == 1.0,
              "perfect predictions score 1 on every metric");
  return out;
}

}  // namespace acceptance
