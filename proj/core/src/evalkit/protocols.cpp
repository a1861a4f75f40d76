#include "gazenlu/evalkit/protocols.hpp"

#include <atomic>
#include <algorithm>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/diffcore/checkpoint.hpp"
#include "gazenlu/trainkit/joint_training.hpp"

namespace gazenlu::evalkit {

std::vector<RunOutcome> execute_runs(const std::vector<RunRequest>& requests, const RunFn& run,
                                     std::size_t jobs) {
  std::vector<RunOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        outcomes[i] = run(requests[i]);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, requests.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

std::map<std::string, std::string> config_echo(const trainkit::TrainConfig& config) {
  return trainkit::parse_key_values(trainkit::to_key_values(config), "config");
}

std::vector<RunRequest> crossval_requests(std::size_t pool_size,
                                          const trainkit::TrainConfig& config, std::size_t folds) {
  const auto members = corpus::fold_members(corpus::kfold(pool_size, folds, config.seed), folds);
  std::vector<RunRequest> requests;
  for (std::size_t f = 0; f < folds; ++f) {
    RunRequest r;
    r.label = "fold" + std::to_string(f);
    r.config = config;
    r.test = members[f];
    r.dev = members[(f + 1) % folds];
    for (std::size_t g = 0; g < folds; ++g)
      if (g != f && g != (f + 1) % folds)
        r.train.insert(r.train.end(), members[g].begin(), members[g].end());
    requests.push_back(std::move(r));
  }
  return requests;
}

EvalReport run_crossval(std::size_t pool_size, const trainkit::TrainConfig& config,
                        const std::string& task, corpus::MetricId metric, const RunFn& run,
                        std::size_t folds, std::size_t jobs) {
  const auto requests = crossval_requests(pool_size, config, folds);
  const auto outcomes = execute_runs(requests, run, jobs);
  EvalReport report;
  report.task = task;
  report.metric = metric;
  report.config = config_echo(config);
  report.config["folds"] = std::to_string(folds);
  for (std::size_t i = 0; i < requests.size(); ++i)
    report.add(requests[i].label, outcomes[i].test.value, outcomes[i].test.error);
  return report;
}

std::vector<EvalReport> run_lowresource(std::size_t pool_size, std::span<const std::size_t> ks,
                                        std::span<const std::uint64_t> data_seeds,
                                        const trainkit::TrainConfig& config,
                                        const std::string& task, corpus::MetricId metric,
                                        const RunFn& run, std::size_t jobs) {
  if (ks.empty() || data_seeds.empty())
    throw std::invalid_argument("run_lowresource: need at least one K and one data seed");
  std::vector<RunRequest> requests;
  for (std::size_t k : ks)
    for (std::uint64_t seed : data_seeds) {
      const corpus::LowResourceSplit split = corpus::low_resource_split(pool_size, k, seed);
      RunRequest r;
      r.label = "k" + std::to_string(k) + "-seed" + std::to_string(seed);
      r.config = config;
      r.train = split.train;
      r.dev = split.dev;
      requests.push_back(std::move(r));
    }
  const auto outcomes = execute_runs(requests, run, jobs);
  std::vector<EvalReport> reports;
  std::size_t i = 0;
  for (std::size_t k : ks) {
    EvalReport report;
    report.task = task;
    report.metric = metric;
    report.config = config_echo(config);
    report.config["k"] = std::to_string(k);
    for (std::uint64_t seed : data_seeds) {
      report.add("seed" + std::to_string(seed), outcomes[i].test.value, outcomes[i].test.error);
      ++i;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

ReportSet sweep_scanpaths(std::span<const std::size_t> counts, const trainkit::TrainConfig& config,
                          const EvaluateFn& evaluate) {
  if (counts.empty()) throw std::invalid_argument("sweep_scanpaths: no counts");
  ReportSet set{"sweep", {}};
  for (std::size_t n : counts) {
    trainkit::TrainConfig c = config;
    c.n_scanpaths = n;
    EvalReport r = evaluate(c);
    r.config["n_scanpaths"] = std::to_string(n);
    set.reports.push_back(std::move(r));
  }
  return set;
}

ReportSet run_ablations(const trainkit::TrainConfig& config, const EvaluateFn& evaluate) {
  ReportSet set{"ablation", {}};
  const struct {
    const char* name;
    bool freeze;
    bool pretrained;
  } variants[] = {{"full", false, true}, {"frozen", true, true}, {"scratch", false, false}};
  for (const auto& v : variants) {
    trainkit::TrainConfig c = config;
    c.freeze_generator = v.freeze;
    c.pretrained_generator = v.pretrained;
    EvalReport r = evaluate(c);
    r.config["ablation"] = v.name;
    set.reports.push_back(std::move(r));
  }
  return set;
}

std::uint64_t eval_sample_seed(const trainkit::TrainConfig& config) {
  return diffcore::derive_stream({config.seed, diffcore::fnv1a64("evaluation")});
}

std::vector<std::vector<double>> predict_all(const augmentor::JointModel& model,
                                             std::span<const augmentor::TextInstance> instances,
                                             std::size_t n_scanpaths, std::uint64_t sample_seed) {
  std::vector<std::vector<double>> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(model.predict(inst, n_scanpaths, sample_seed));
  return out;
}

MetricValue evaluate_model(const augmentor::JointModel& model,
                           std::span<const augmentor::TextInstance> instances,
                           corpus::MetricId metric, std::size_t n_scanpaths,
                           std::uint64_t sample_seed) {
  std::vector<double> labels;
  for (const auto& inst : instances) labels.push_back(inst.label);
  return compute_metric(metric, predict_all(model, instances, n_scanpaths, sample_seed), labels);
}

namespace {

std::vector<augmentor::TextInstance> pick(const std::vector<augmentor::TextInstance>& pool,
                                          const std::vector<std::size_t>& idx) {
  std::vector<augmentor::TextInstance> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pool.at(i));
  return out;
}

}  // namespace

RunFn make_training_run(const TaskData& data, TrainerOptions options) {
  return [&data, options](const RunRequest& request) {
    const trainkit::TrainConfig& cfg = request.config;
    augmentor::JointModel model =
        augmentor::JointModel::create(trainkit::joint_config(cfg, trainkit::task_spec(data.spec)),
                                      cfg.seed);
    if (cfg.pretrained_generator && cfg.source == "generator") {
      if (!options.pretrained_checkpoint)
        throw std::invalid_argument("run " + request.label +
                                    ": pretrained_generator is set but no checkpoint was given");
      diffcore::apply_checkpoint(diffcore::parse_checkpoint(*options.pretrained_checkpoint),
                                 model.pretrained_parameters());
    }
    const auto train = pick(data.pool, request.train);
    const auto dev = pick(data.pool, request.dev);
    const auto test = request.test.empty() ? data.test : pick(data.pool, request.test);
    const std::uint64_t sample_seed = eval_sample_seed(cfg);
    const corpus::MetricId metric = data.spec.metric;

    RunOutcome outcome;
    outcome.generator_hash_before = diffcore::checkpoint_hash(model.generator_parameters());
    const trainkit::JointTrainResult result = trainkit::train_joint(
        model, train, cfg,
        [&](const augmentor::JointModel& m) {
          return evaluate_model(m, dev, metric, cfg.n_scanpaths, sample_seed).value.value_or(0.0);
        },
        [&](const trainkit::EpochLog& e) {
          if (options.on_epoch) options.on_epoch(request, e);
        });
    outcome.generator_hash_after = diffcore::checkpoint_hash(model.generator_parameters());
    outcome.best_epoch = result.best_epoch;
    outcome.log = result.log;
    outcome.test = evaluate_model(model, test, metric, cfg.n_scanpaths, sample_seed);
    outcome.checkpoint = diffcore::serialize_checkpoint(model.parameters());
    return outcome;
  };
}

}  // namespace gazenlu::evalkit
