#include "gazenlu/evalkit/report.hpp"

#include <charconv>
#include <cmath>

#include "json.hpp"

namespace gazenlu::evalkit {

using nlohmann::ordered_json;

void EvalReport::add(std::string run, std::optional<double> value, std::string error) {
  runs.push_back({std::move(run), value, std::move(error)});
  finalize();
}

void EvalReport::finalize() {
  std::vector<double> v;
  for (const RunValue& r : runs)
    if (r.value) v.push_back(*r.value);
  valid_runs = v.size();
  mean = 0.0;
  std_error = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  std_error = std::sqrt(ss / static_cast<double>(v.size() - 1)) /
              std::sqrt(static_cast<double>(v.size()));
}

namespace {

ordered_json report_json(const EvalReport& r) {
  ordered_json runs = ordered_json::array();
  for (const RunValue& v : r.runs) {
    ordered_json j = {{"run", v.run}};
    j["value"] = v.value ? ordered_json(*v.value) : ordered_json(nullptr);
    if (!v.error.empty()) j["error"] = v.error;
    runs.push_back(std::move(j));
  }
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  return {{"task", r.task},         {"metric", corpus::to_string(r.metric)},
          {"config", config},       {"runs", runs},
          {"mean", r.mean},         {"std_error", r.std_error},
          {"valid_runs", r.valid_runs}};
}

EvalReport report_of(const ordered_json& j) {
  EvalReport r;
  r.task = j.at("task").get<std::string>();
  r.metric = corpus::parse_metric(j.at("metric").get<std::string>());
  for (const auto& [k, v] : j.at("config").items()) r.config[k] = v.get<std::string>();
  for (const auto& run : j.at("runs")) {
    RunValue v;
    v.run = run.at("run").get<std::string>();
    if (!run.at("value").is_null()) v.value = run.at("value").get<double>();
    if (run.contains("error")) v.error = run.at("error").get<std::string>();
    r.runs.push_back(std::move(v));
  }
  r.finalize();
  return r;
}

std::string format_value(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

EvalReport report_from_json(const std::string& text) {
  return report_of(ordered_json::parse(text));
}

std::string to_json(const ReportSet& set) {
  ordered_json reports = ordered_json::array();
  for (const EvalReport& r : set.reports) reports.push_back(report_json(r));
  return ordered_json{{"kind", set.kind}, {"reports", reports}}.dump(2) + "\n";
}

ReportSet report_set_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  ReportSet set;
  set.kind = j.at("kind").get<std::string>();
  for (const auto& r : j.at("reports")) set.reports.push_back(report_of(r));
  return set;
}

std::string to_csv(const ReportSet& set) {
  std::string out = "kind,report,config,task,metric,run,value\n";
  for (std::size_t i = 0; i < set.reports.size(); ++i) {
    const EvalReport& r = set.reports[i];
    std::string config;
    for (const auto& [k, v] : r.config) config += (config.empty() ? "" : ";") + k + "=" + v;
    for (const RunValue& v : r.runs)
      out += set.kind + "," + std::to_string(i) + "," + config + "," + r.task + "," +
             corpus::to_string(r.metric) + "," + v.run + "," +
             (v.value ? format_value(*v.value) : std::string("NA")) + "\n";
  }
  return out;
}

}  // namespace gazenlu::evalkit
