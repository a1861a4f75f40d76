#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazenlu/corpus/tsv.hpp"

namespace gazenlu::evalkit {

/// A metric with no defined value for the given input (e.g. AUC on a
/// single class).
class MetricUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Positive class is label 1.
Confusion confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);
/// Binary F1 of class 1; 0 when there are no true positives.
double f1(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);
/// Matthews correlation from the 2×2 confusion; 0 when the denominator is 0.
double matthews(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);
/// Ranks starting at 1, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> values);
/// Pearson correlation of average ranks; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);
/// Normalized Mann–Whitney U: P(score_pos > score_neg) + ½ P(tie).
/// Throws MetricUndefined when only one class is present.
double auc(std::span<const double> scores, std::span<const std::size_t> labels);

struct MetricValue {
  std::optional<double> value;
  std::string error;  // set when undefined
};

/// Scores model outputs (one vector per instance: logits, or a single
/// regression value) against labels. Classification uses the argmax; AUC
/// uses the class-1 logit; Spearman uses the first output.
MetricValue compute_metric(corpus::MetricId metric, const std::vector<std::vector<double>>& outputs,
                           const std::vector<double>& labels);

}  // namespace gazenlu::evalkit
