#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/corpus/synthetic.hpp"
#include "gazenlu/corpus/tsv.hpp"
#include "gazenlu/diffcore/rng.hpp"

using namespace gazenlu;
using namespace gazenlu::corpus;

TEST_CASE("gaze corpus round trip") {
  const std::vector<GazeRecord> records = {{"s1", "r1", "the cat sat", {0, 1, 2}},
                                           {"s1", "r2", "the cat sat", {0, 2, 1, 2}}};
  const std::string text = format_gaze_corpus(records);
  CHECK(parse_gaze_corpus(text, "mem") == records);
}

TEST_CASE("gaze parse errors carry the line number") {
  const std::string bad = "sentence_id\treader_id\ttext\tfixations\ns1\tr1\tthe cat\t0 5\n";
  try {
    parse_gaze_corpus(bad, "bad.tsv");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.tsv") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_gaze_corpus("wrong\theader\n", "h"), DataError);
}

TEST_CASE("dataset round trip with and without pairs") {
  const DatasetSpec single = keyword_spec();
  const std::vector<DatasetRow> rows = {{"a", "one two", std::nullopt, 1}, {"b", "three", std::nullopt, 0}};
  CHECK(parse_dataset(format_dataset(rows, single), single, "mem") == rows);
  const DatasetSpec pair = pair_spec();
  const std::vector<DatasetRow> prow = {{"p", "one", std::string("two"), 1}};
  CHECK(parse_dataset(format_dataset(prow, pair), pair, "mem") == prow);
}

TEST_CASE("rows without an id column get generated ids") {
  const auto rows = parse_dataset("sentence1\tlabel\nhello there\t1\n", keyword_spec(), "x");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].id == "keyword-0");
}

TEST_CASE("metric names") {
  for (auto m : {MetricId::accuracy, MetricId::f1, MetricId::matthews, MetricId::spearman, MetricId::auc})
    CHECK(parse_metric(to_string(m)) == m);
  CHECK_THROWS(parse_metric("bleu"));
}

TEST_CASE("saccade process step distribution") {
  const MarkovSaccadeModel m;
  CHECK(m.move_entropy() == doctest::Approx(0.93764).epsilon(1e-5));
  const auto first = m.step_distribution(-1, 5);
  REQUIRE(first.size() == 1);
  CHECK(first[0].first == 0);
  const auto at0 = m.step_distribution(0, 5);
  double s = 0;
  for (const auto& [o, p] : at0) {
    CHECK(o != -1);
    s += p;
  }
  CHECK(s == doctest::Approx(1.0));
  bool stop_at_end = false;
  for (const auto& [o, p] : m.step_distribution(4, 5)) stop_at_end |= o == kStopOutcome;
  CHECK(stop_at_end);
}

TEST_CASE("path NLL matches the step probabilities") {
  const MarkovSaccadeModel m;
  const std::vector<std::size_t> path = {0, 1, 3, 2, 3, 4};
  const auto [nll, steps] = m.path_nll(path, 5);
  CHECK(steps == path.size() + 1);
  double oracle = 0;
  std::ptrdiff_t cur = -1;
  for (std::size_t i = 0; i <= path.size(); ++i) {
    const std::ptrdiff_t next = i < path.size() ? static_cast<std::ptrdiff_t>(path[i]) : kStopOutcome;
    for (const auto& [o, p] : m.step_distribution(cur, 5))
      if (o == next) oracle -= std::log(p);
    cur = next;
  }
  CHECK(nll == doctest::Approx(oracle));
}

TEST_CASE("sampled paths follow the process") {
  const MarkovSaccadeModel m;
  diffcore::Rng rng(5, 5);
  std::map<std::ptrdiff_t, std::size_t> moves;
  for (int i = 0; i < 5000; ++i) {
    const auto path = m.sample(8, rng, 16);
    REQUIRE_FALSE(path.empty());
    CHECK(path.front() == 0);
    CHECK(path.size() <= 16);
    for (std::size_t j = 1; j < path.size(); ++j) {
      const auto d = static_cast<std::ptrdiff_t>(path[j]) - static_cast<std::ptrdiff_t>(path[j - 1]);
      CHECK((d == 1 || d == 2 || d == -1));
      if (path[j - 1] > 0) ++moves[d];
    }
  }
  const double total = static_cast<double>(moves[1] + moves[2] + moves[-1]);
  CHECK(moves[1] / total == doctest::Approx(0.6).epsilon(0.05));
  CHECK(moves[-1] / total == doctest::Approx(0.15).epsilon(0.1));
}

TEST_CASE("synthetic tasks are balanced and deterministic") {
  const auto kw = make_keyword_task(101, 3, 5, 10);
  std::size_t pos = 0;
  for (const auto& r : kw) {
    const bool has = (" " + r.sentence1 + " ").find(" " + planted_keyword() + " ") != std::string::npos;
    CHECK(has == (r.label == 1.0));
    pos += r.label == 1.0;
    const auto n = word_count(r.sentence1);
    CHECK(n >= 5);
    CHECK(n <= 10);
  }
  CHECK(pos == 50);
  CHECK(make_keyword_task(101, 3, 5, 10) == kw);
  const auto pr = make_pair_task(40, 3, 5, 10);
  std::size_t ppos = 0;
  for (const auto& r : pr) {
    REQUIRE(r.sentence2.has_value());
    ppos += r.label == 1.0;
  }
  CHECK(ppos == 20);
}

TEST_CASE("filler words exclude the planted tokens") {
  const auto& filler = filler_words();
  const std::set<std::string> f(filler.begin(), filler.end());
  CHECK(f.size() == filler.size());
  CHECK_FALSE(f.count(planted_keyword()));
  for (const auto& m : pair_markers()) CHECK_FALSE(f.count(m));
}

TEST_CASE("random labels are coin flips over the same rows") {
  const auto kw = make_keyword_task(2000, 4, 5, 10);
  const auto shuffled = randomize_labels(kw, 9);
  REQUIRE(shuffled.size() == kw.size());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kw.size(); ++i) {
    CHECK(shuffled[i].sentence1 == kw[i].sentence1);
    agree += shuffled[i].label == kw[i].label;
  }
  CHECK(agree / 2000.0 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("shuffled_indices is a permutation") {
  const auto p = shuffled_indices(100, 3);
  CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 100);
  CHECK(p == shuffled_indices(100, 3));
  CHECK(p != shuffled_indices(100, 4));
}

TEST_CASE("property: low-resource splits") {
  for (std::size_t n : {50u, 1200u, 2500u})
    for (std::size_t k : {10u, 40u, 500u})
      for (std::uint64_t seed : kDataSeeds) {
        if (k > n) {
          CHECK_THROWS(low_resource_split(n, k, seed));
          continue;
        }
        const auto s = low_resource_split(n, k, seed);
        CHECK(s.train.size() == k);
        CHECK(s.dev.size() == std::min<std::size_t>(kLowResourceDevSize, n - k));
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.dev.begin(), s.dev.end());
        CHECK(all.size() == s.train.size() + s.dev.size());
        const auto perm = shuffled_indices(n, seed);
        CHECK(std::equal(s.train.begin(), s.train.end(), perm.begin()));
      }
}

TEST_CASE("property: k-fold sizes and membership") {
  for (std::size_t n : {10u, 37u, 500u}) {
    const auto a = kfold(n, 10, 7);
    const auto m = fold_members(a, 10);
    std::size_t total = 0;
    for (std::size_t f = 0; f < 10; ++f) {
      CHECK(m[f].size() == n / 10 + (f < n % 10 ? 1 : 0));
      CHECK(std::is_sorted(m[f].begin(), m[f].end()));
      for (std::size_t i : m[f]) CHECK(a[i] == f);
      total += m[f].size();
    }
    CHECK(total == n);
  }
}

TEST_CASE("gaze split keeps readers of a sentence together") {
  const auto gaze = make_gaze_corpus(3, SyntheticConfig{.gaze_sentences = 50});
  const auto split = split_gaze_by_sentence(gaze, 0.2, 1);
  std::set<std::string> train_ids, dev_ids;
  for (std::size_t i : split.train) train_ids.insert(gaze[i].sentence_id);
  for (std::size_t i : split.dev) dev_ids.insert(gaze[i].sentence_id);
  for (const auto& id : dev_ids) CHECK_FALSE(train_ids.count(id));
  CHECK(dev_ids.size() == 10);
  CHECK(split.train.size() + split.dev.size() == gaze.size());
  CHECK_THROWS(split_gaze_by_sentence(gaze, 1.0, 1));
}

TEST_CASE("synthetic gaze corpus") {
  SyntheticConfig cfg;
  cfg.gaze_sentences = 20;
  const auto gaze = make_gaze_corpus(1, cfg);
  CHECK(gaze.size() == 20 * cfg.readers);
  for (const auto& r : gaze) {
    const std::size_t w = word_count(r.text);
    for (std::size_t f : r.fixations) CHECK(f < w);
  }
  CHECK(make_gaze_corpus(1, cfg) == gaze);
}
