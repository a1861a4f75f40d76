#include "gazenlu/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gazenlu::evalkit {
namespace {

void check_lengths(const char* name, std::size_t a, std::size_t b, std::size_t min_len) {
  if (a != b)
    throw std::invalid_argument(std::string(name) + ": " + std::to_string(a) + " predictions vs " +
                                std::to_string(b) + " labels");
  if (a < min_len)
    throw std::invalid_argument(std::string(name) + ": need at least " + std::to_string(min_len) +
                                " items");
}

void check_binary(const char* name, std::span<const std::size_t> v) {
  for (std::size_t x : v)
    if (x > 1) throw std::invalid_argument(std::string(name) + ": labels must be 0 or 1");
}

}  // namespace

Confusion confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  check_lengths("confusion", predicted.size(), labels.size(), 1);
  check_binary("confusion", predicted);
  check_binary("confusion", labels);
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == 1, l = labels[i] == 1;
    if (p && l) ++c.tp;
    else if (p) ++c.fp;
    else if (l) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  check_lengths("accuracy", predicted.size(), labels.size(), 1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double f1(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  const Confusion c = confusion(predicted, labels);
  if (c.tp == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

double matthews(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
  check_lengths("matthews", predicted.size(), labels.size(), 2);
  const Confusion c = confusion(predicted, labels);
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths("spearman", x.size(), y.size(), 2);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double auc(std::span<const double> scores, std::span<const std::size_t> labels) {
  check_lengths("auc", scores.size(), labels.size(), 2);
  check_binary("auc", labels);
  const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw MetricUndefined("auc: labels contain a single class");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1) / 2.0) / (p * q);
}

MetricValue compute_metric(corpus::MetricId metric, const std::vector<std::vector<double>>& outputs,
                           const std::vector<double>& labels) {
  if (outputs.size() != labels.size())
    throw std::invalid_argument("compute_metric: outputs and labels differ in length");
  MetricValue out;
  try {
    if (metric == corpus::MetricId::spearman) {
      std::vector<double> first;
      for (const auto& o : outputs) first.push_back(o.at(0));
      out.value = spearman(first, labels);
      return out;
    }
    std::vector<std::size_t> gold;
    for (double l : labels) gold.push_back(static_cast<std::size_t>(l));
    if (metric == corpus::MetricId::auc) {
      std::vector<double> scores;
      for (const auto& o : outputs) scores.push_back(o.at(1));
      out.value = auc(scores, gold);
      return out;
    }
    std::vector<std::size_t> predicted;
    for (const auto& o : outputs)
      predicted.push_back(static_cast<std::size_t>(std::max_element(o.begin(), o.end()) - o.begin()));
    switch (metric) {
      case corpus::MetricId::accuracy: out.value = accuracy(predicted, gold); break;
      case corpus::MetricId::f1: out.value = f1(predicted, gold); break;
      case corpus::MetricId::matthews: out.value = matthews(predicted, gold); break;
      default: break;
    }
  } catch (const MetricUndefined& e) {
    out.value.reset();
    out.error = e.what();
  }
  return out;
}

}  // namespace gazenlu::evalkit
