#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazenlu/corpus/tsv.hpp"

namespace gazenlu::evalkit {

struct RunValue {
  std::string run;  // e.g. "fold3" or "seed111"
  std::optional<double> value;
  std::string error;
};

/// Per-run metric values with mean and standard error over the runs that
/// produced a value. `std_error` is the sample standard deviation / √n
/// (0 for a single run).
struct EvalReport {
  std::string task;
  corpus::MetricId metric = corpus::MetricId::accuracy;
  std::map<std::string, std::string> config;  // echoed settings
  std::vector<RunValue> runs;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t valid_runs = 0;

  void add(std::string run, std::optional<double> value, std::string error = {});
  /// Recomputes mean, std_error and valid_runs from `runs`.
  void finalize();
};

std::string to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// A named group of reports (a protocol's output).
struct ReportSet {
  std::string kind;  // crossval, lowresource, sweep, ablation, ...
  std::vector<EvalReport> reports;
};

std::string to_json(const ReportSet& set);
ReportSet report_set_from_json(const std::string& text);
/// Flat rows: kind, report index, config (k=v;...), task, metric, run, value.
std::string to_csv(const ReportSet& set);

}  // namespace gazenlu::evalkit
