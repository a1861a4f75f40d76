#include "verbs.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "gazenlu/corpus/splits.hpp"
#include "gazenlu/corpus/synthetic.hpp"
#include "gazenlu/diffcore/checkpoint.hpp"
#include "gazenlu/evalkit/protocols.hpp"
#include "gazenlu/gazegen/sampling.hpp"
#include "gazenlu/textenc/tokenizer.hpp"
#include "gazenlu/trainkit/joint_training.hpp"
#include "json.hpp"

namespace gazenlu::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using diffcore::hex64;
using evalkit::RunFn;
using evalkit::RunOutcome;
using evalkit::RunRequest;
using trainkit::TrainConfig;

std::mutex g_log_mutex;

void note(const std::string& line) {
  const std::lock_guard lock(g_log_mutex);
  std::cerr << line << '\n';
}

void write_text(const fs::path& path, std::string_view text) { diffcore::write_file_bytes(path, text); }

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const TrainConfig& cfg) {
  json out = json::object();
  std::istringstream lines(trainkit::to_key_values(cfg));
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  trainkit::KeyValues kv;
  for (const auto& [k, v] : j.items()) kv[k] = v.get<std::string>();
  trainkit::apply_key_values(cfg, kv);
  cfg.validate();
  return cfg;
}

std::string file_hash(const std::string& path) {
  return hex64(diffcore::fnv1a64(diffcore::read_file_bytes(path)));
}

/// Creates the run directory and writes manifest.json, the only artifact
/// carrying a timestamp. The directory name hashes the verb, the resolved
/// configuration and the inputs (including input file contents).
fs::path open_run_dir(const Common& common, const std::string& verb, const TrainConfig& cfg,
                      const json& inputs, std::uint64_t seed) {
  fs::path dir;
  if (!common.out.empty()) {
    dir = common.out;
  } else {
    const char* env = std::getenv("GAZENLU_RUNS");
    const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
    const std::string key = verb + "\n" + trainkit::to_key_values(cfg) + inputs.dump();
    dir = root / (verb + "-" + hex64(diffcore::fnv1a64(key)).substr(0, 12) + "-s" +
                  std::to_string(seed));
  }
  fs::create_directories(dir);
  const json manifest = {{"verb", verb},
                         {"created", timestamp_utc()},
                         {"command", common.command_line},
                         {"inputs", inputs},
                         {"config", config_json(cfg)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return dir;
}

json read_manifest(const fs::path& run) {
  return json::parse(diffcore::read_file_bytes(run / "manifest.json"));
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (const T& x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

// ---- task data ------------------------------------------------------------

corpus::SyntheticConfig synthetic_config(const SyntheticArgs& a) {
  corpus::SyntheticConfig c;
  c.gaze_sentences = a.gaze_sentences;
  c.readers = a.readers;
  c.keyword_instances = a.keyword_instances;
  c.pair_instances = a.pair_instances;
  return c;
}

void split_tail(const std::vector<corpus::DatasetRow>& rows, std::size_t test_size,
                std::vector<corpus::DatasetRow>& pool, std::vector<corpus::DatasetRow>& test) {
  if (test_size >= rows.size())
    throw std::invalid_argument("test size " + std::to_string(test_size) + " leaves no training rows");
  const auto cut = rows.begin() + static_cast<std::ptrdiff_t>(rows.size() - test_size);
  pool.assign(rows.begin(), cut);
  test.assign(cut, rows.end());
}

struct LoadedTask {
  corpus::DatasetSpec spec;
  std::vector<corpus::DatasetRow> pool;
  std::vector<corpus::DatasetRow> test;
  std::vector<corpus::GazeRecord> gaze;  // synthetic tasks only
  bool synthetic = false;
};

corpus::DatasetSpec custom_spec(const TaskArgs& a) {
  corpus::DatasetSpec spec;
  spec.task = a.task;
  spec.pair = a.pair;
  spec.metric = corpus::parse_metric(a.metric);
  spec.n_classes = a.n_classes;
  if (!a.label_range.empty() || spec.metric == corpus::MetricId::spearman) {
    const auto comma = a.label_range.find(',');
    if (comma == std::string::npos)
      throw UsageError("--label-range min,max is required for a regression task");
    spec.label_kind = corpus::LabelKind::real;
    spec.label_min = std::stod(a.label_range.substr(0, comma));
    spec.label_max = std::stod(a.label_range.substr(comma + 1));
  }
  return spec;
}

LoadedTask load_task(const TaskArgs& a) {
  LoadedTask t;
  if (a.data.empty()) {
    if (a.task != "keyword" && a.task != "pair")
      throw UsageError("--data is required for task '" + a.task + "' (built-in: keyword, pair)");
    SyntheticArgs s;
    s.seed = a.synthetic_seed;
    corpus::SyntheticSuite suite = corpus::make_synthetic_suite(s.seed, synthetic_config(s));
    t.spec = a.task == "keyword" ? corpus::keyword_spec() : corpus::pair_spec();
    split_tail(a.task == "keyword" ? suite.keyword : suite.pair, s.test_size, t.pool, t.test);
    t.gaze = std::move(suite.gaze);
    t.synthetic = true;
  } else {
    if (a.test.empty()) throw UsageError("--test is required with --data");
    if (a.metric.empty()) throw UsageError("--metric is required with --data");
    t.spec = custom_spec(a);
    t.pool = corpus::load_dataset(a.data, t.spec);
    t.test = corpus::load_dataset(a.test, t.spec);
  }
  if (a.random_labels)
    t.pool = corpus::randomize_labels(
        std::move(t.pool), diffcore::derive_stream({a.synthetic_seed, diffcore::fnv1a64("random-labels")}));
  return t;
}

json task_json(const TaskArgs& a) {
  json files = json::object();
  for (const std::string& p : {a.data, a.test, a.vocab})
    if (!p.empty()) files[p] = file_hash(p);
  if (!a.pretrained.empty()) {
    const std::string ckpt = (fs::path(a.pretrained) / "generator.ckpt").string();
    files[ckpt] = file_hash(ckpt);
  }
  return {{"task", a.task},
          {"data", a.data},
          {"test", a.test},
          {"metric", a.metric},
          {"pair", a.pair},
          {"n_classes", a.n_classes},
          {"label_range", a.label_range},
          {"synthetic_seed", a.synthetic_seed},
          {"random_labels", a.random_labels},
          {"pretrained", a.pretrained},
          {"vocab", a.vocab},
          {"dev_size", a.dev_size},
          {"files", files}};
}

TaskArgs task_from_json(const json& j) {
  TaskArgs a;
  a.task = j.at("task").get<std::string>();
  a.data = j.at("data").get<std::string>();
  a.test = j.at("test").get<std::string>();
  a.metric = j.at("metric").get<std::string>();
  a.pair = j.at("pair").get<bool>();
  a.n_classes = j.at("n_classes").get<std::size_t>();
  a.label_range = j.at("label_range").get<std::string>();
  a.synthetic_seed = j.at("synthetic_seed").get<std::uint64_t>();
  a.random_labels = j.at("random_labels").get<bool>();
  a.pretrained = j.at("pretrained").get<std::string>();
  a.vocab = j.at("vocab").get<std::string>();
  a.dev_size = j.at("dev_size").get<std::size_t>();
  return a;
}

textenc::Vocab task_vocab(const TaskArgs& a, const LoadedTask& t, const TrainConfig& cfg) {
  textenc::Vocab vocab;
  if (!a.pretrained.empty()) {
    vocab = textenc::Vocab::load(fs::path(a.pretrained) / "vocab.txt");
  } else if (!a.vocab.empty()) {
    vocab = textenc::Vocab::load(a.vocab);
  } else {
    std::vector<std::string> texts;
    for (const auto& r : t.gaze) texts.push_back(r.text);
    for (const auto& r : t.pool) {
      texts.push_back(r.sentence1);
      if (r.sentence2) texts.push_back(*r.sentence2);
    }
    vocab = textenc::Vocab::build(texts, cfg.vocab_size);
  }
  if (vocab.size() > cfg.vocab_size)
    throw std::invalid_argument("vocabulary has " + std::to_string(vocab.size()) +
                                " tokens but vocab_size is " + std::to_string(cfg.vocab_size));
  return vocab;
}

evalkit::TaskData task_data(const LoadedTask& t, const textenc::Vocab& vocab, const TrainConfig& cfg) {
  return {t.spec, trainkit::make_instances(t.pool, vocab, cfg.max_len),
          trainkit::make_instances(t.test, vocab, cfg.max_len)};
}

// ---- pretraining ----------------------------------------------------------

gazegen::GeneratorConfig generator_config(const TrainConfig& cfg) {
  return trainkit::joint_config(cfg, trainkit::task_spec(corpus::keyword_spec())).generator;
}

/// Trains the generator on reading data and writes generator.ckpt,
/// vocab.txt, pretrain_epochs.jsonl and pretrain.json into `dir`.
std::string pretrain_into(const fs::path& dir, const TrainConfig& cfg,
                          const std::vector<corpus::GazeRecord>& records,
                          const textenc::Vocab& vocab, double dev_fraction) {
  const auto examples = trainkit::prepare_gaze_examples(records, vocab, cfg.max_len);
  const corpus::GazeSplit split = corpus::split_gaze_by_sentence(
      records, dev_fraction, diffcore::derive_stream({cfg.seed, diffcore::fnv1a64("gaze-split")}));
  std::vector<trainkit::GazeExample> train, dev;
  for (std::size_t i : split.train) train.push_back(examples[i]);
  for (std::size_t i : split.dev) dev.push_back(examples[i]);
  if (train.empty() || dev.empty())
    throw std::invalid_argument("gaze corpus needs at least two sentences to hold out a dev set");

  trainkit::GazeModel model = trainkit::GazeModel::create(generator_config(cfg), cfg.seed);
  trainkit::PretrainOptions options;
  options.epochs = cfg.pretrain_epochs;
  options.lr = cfg.pretrain_lr;
  options.weight_decay = cfg.weight_decay;
  options.batch_size = cfg.batch_size;
  options.patience = cfg.patience;
  options.seed = cfg.seed;
  std::string log;
  const trainkit::PretrainResult result =
      trainkit::pretrain_generator(model, train, dev, options, [&](const trainkit::EpochLog& e) {
        log += trainkit::to_json_line(e) + "\n";
        note("[pretrain] epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.train_loss) +
             " dev_nll " + std::to_string(e.dev_metric));
      });
  const std::string bytes = diffcore::serialize_checkpoint(model.parameters());
  write_text(dir / "generator.ckpt", bytes);
  write_text(dir / "pretrain_epochs.jsonl", log);
  vocab.save(dir / "vocab.txt");
  const json summary = {{"best_epoch", result.best_epoch},
                        {"best_dev_nll", result.best_dev_nll},
                        {"train_records", train.size()},
                        {"dev_records", dev.size()},
                        {"checkpoint_hash", hex64(diffcore::fnv1a64(bytes))}};
  write_text(dir / "pretrain.json", summary.dump(2) + "\n");
  return bytes;
}

std::optional<std::string> generator_checkpoint(const TaskArgs& a, const LoadedTask& t,
                                                const TrainConfig& cfg, const textenc::Vocab& vocab,
                                                const fs::path& dir, bool needed) {
  if (!needed || cfg.source != "generator") return std::nullopt;
  if (!a.pretrained.empty()) {
    const json pre = read_manifest(a.pretrained).at("config");
    const json here = config_json(cfg);
    std::string mismatch;
    for (const char* key : {"vocab_size", "width", "layers", "heads", "hidden", "max_len",
                            "max_offset_len", "share_text_encoder"})
      if (pre.at(key) != here.at(key))
        mismatch += std::string(mismatch.empty() ? "" : ", ") + key + "=" +
                    pre.at(key).get<std::string>();
    if (!mismatch.empty())
      throw std::invalid_argument("model shape differs from the pretrained run " + a.pretrained +
                                  " (it used " + mismatch + ")");
    return diffcore::read_file_bytes(fs::path(a.pretrained) / "generator.ckpt");
  }
  if (!t.synthetic)
    throw UsageError("a pretrained generator is required: pass --pretrained DIR or set "
                     "pretrained_generator=false");
  return pretrain_into(dir / "pretrain", cfg, t.gaze, vocab, 0.1);
}

// ---- training runs --------------------------------------------------------

RunRequest base_request(std::size_t pool_size, const SplitArgs& split, std::size_t dev_size,
                        const TrainConfig& cfg) {
  corpus::LowResourceSplit s;
  RunRequest r;
  if (split.k) {
    s = corpus::low_resource_split(pool_size, *split.k, split.data_seed);
    r.label = "k" + std::to_string(*split.k) + "-seed" + std::to_string(split.data_seed);
  } else {
    if (pool_size < 2) throw std::invalid_argument("training pool needs at least two rows");
    const std::size_t dev = std::min(dev_size, pool_size - 1);
    s = corpus::low_resource_split(pool_size, pool_size - dev, split.data_seed, dev);
    r.label = "full-seed" + std::to_string(split.data_seed);
  }
  r.train = s.train;
  r.dev = s.dev;
  r.config = cfg;
  return r;
}

json metric_json(const evalkit::MetricValue& v) {
  return v.value ? json(*v.value) : json(nullptr);
}

void write_run(const fs::path& dir, const RunRequest& req, const RunOutcome& o) {
  write_text(dir / "model.ckpt", o.checkpoint);
  std::string log;
  for (const auto& e : o.log) log += trainkit::to_json_line(e) + "\n";
  write_text(dir / "epochs.jsonl", log);
  json result = {{"label", req.label},
                 {"test_metric", metric_json(o.test)},
                 {"best_epoch", o.best_epoch},
                 {"generator_hash_before", hex64(o.generator_hash_before)},
                 {"generator_hash_after", hex64(o.generator_hash_after)},
                 {"train_size", req.train.size()},
                 {"dev_size", req.dev.size()}};
  if (!o.test.error.empty()) result["error"] = o.test.error;
  write_text(dir / "result.json", result.dump(2) + "\n");
  const json split = {{"train", req.train}, {"dev", req.dev}, {"test", req.test}};
  write_text(dir / "split.json", split.dump() + "\n");
}

evalkit::TrainerOptions trainer_options(std::optional<std::string> checkpoint) {
  evalkit::TrainerOptions options;
  options.pretrained_checkpoint = std::move(checkpoint);
  options.on_epoch = [](const RunRequest& r, const trainkit::EpochLog& e) {
    note("[" + r.label + "] epoch " + std::to_string(e.epoch) + " loss " +
         std::to_string(e.train_loss) + " dev " + std::to_string(e.dev_metric));
  };
  return options;
}

/// Wraps a run so that each one leaves its artifacts in root/<label>.
RunFn recording(RunFn inner, fs::path root) {
  return [inner = std::move(inner), root = std::move(root)](const RunRequest& r) {
    RunOutcome o = inner(r);
    write_run(root / r.label, r, o);
    return o;
  };
}

/// Evaluates a configuration as the mean over training seeds on one split.
evalkit::EvaluateFn over_seeds(const RunRequest& base, const RunFn& run,
                               const std::vector<std::uint64_t>& seeds, std::size_t jobs,
                               const evalkit::TaskData& data,
                               std::function<std::string(const TrainConfig&)> prefix) {
  return [=, &data](const TrainConfig& c) {
    std::vector<RunRequest> requests;
    for (std::uint64_t s : seeds) {
      RunRequest r = base;
      r.config = c;
      r.config.seed = s;
      r.label = prefix(c) + "-seed" + std::to_string(s);
      requests.push_back(std::move(r));
    }
    const auto outcomes = evalkit::execute_runs(requests, run, jobs);
    evalkit::EvalReport report;
    report.task = data.spec.task;
    report.metric = data.spec.metric;
    report.config = evalkit::config_echo(c);
    report.config.erase("seed");
    report.config["seeds"] = join(seeds);
    for (std::size_t i = 0; i < seeds.size(); ++i)
      report.add("seed" + std::to_string(seeds[i]), outcomes[i].test.value, outcomes[i].test.error);
    return report;
  };
}

void write_reports(const fs::path& dir, const evalkit::ReportSet& set) {
  write_text(dir / "report.json", evalkit::to_json(set));
  write_text(dir / "report.csv", evalkit::to_csv(set));
  for (const auto& r : set.reports)
    std::cout << set.kind << " " << r.task << " " << corpus::to_string(r.metric) << " mean "
              << r.mean << " stderr " << r.std_error << " (" << r.valid_runs << " runs)\n";
  std::cout << dir.string() << "\n";
}

/// Everything a task-level verb needs before it can run.
struct Prepared {
  TrainConfig cfg;
  LoadedTask loaded;
  fs::path dir;
  textenc::Vocab vocab;
  evalkit::TaskData data;
};

Prepared prepare(const Common& common, const TaskArgs& task, const std::string& verb, json inputs) {
  Prepared p;
  p.cfg = resolve_config(common);
  p.loaded = load_task(task);
  inputs["task"] = task_json(task);
  p.dir = open_run_dir(common, verb, p.cfg, inputs, p.cfg.seed);
  p.vocab = task_vocab(task, p.loaded, p.cfg);
  p.vocab.save(p.dir / "vocab.txt");
  p.data = task_data(p.loaded, p.vocab, p.cfg);
  return p;
}

}  // namespace

TrainConfig resolve_config(const Common& common) {
  TrainConfig cfg;
  if (!common.config_path.empty()) cfg = trainkit::load_config(common.config_path);
  trainkit::apply_key_values(cfg, common.overrides);
  cfg.validate();
  return cfg;
}

int build_vocab(const Common& common, const VocabArgs& args) {
  if (args.corpora.empty() && args.datasets.empty())
    throw UsageError("build-vocab needs at least one --corpus or --dataset");
  std::vector<std::string> texts;
  json files = json::object();
  for (const auto& path : args.corpora) {
    for (const auto& r : corpus::load_gaze_corpus(path)) texts.push_back(r.text);
    files[path] = file_hash(path);
  }
  corpus::DatasetSpec spec;
  spec.pair = args.pair;
  spec.label_kind = corpus::LabelKind::real;
  spec.label_min = -1e300;
  spec.label_max = 1e300;
  for (const auto& path : args.datasets) {
    for (const auto& r : corpus::load_dataset(path, spec)) {
      texts.push_back(r.sentence1);
      if (r.sentence2) texts.push_back(*r.sentence2);
    }
    files[path] = file_hash(path);
  }
  TrainConfig cfg = resolve_config(common);
  cfg.vocab_size = args.size;
  const fs::path dir = open_run_dir(common, "build-vocab", cfg,
                                    {{"size", args.size}, {"pair", args.pair}, {"files", files}},
                                    cfg.seed);
  const textenc::Vocab vocab = textenc::Vocab::build(texts, args.size);
  vocab.save(dir / "vocab.txt");
  std::cout << vocab.size() << " tokens\n" << dir.string() << "\n";
  return 0;
}

int make_synthetic(const Common& common, const SyntheticArgs& args) {
  if (args.test_size >= std::min(args.keyword_instances, args.pair_instances))
    throw std::invalid_argument("--test-size must be below both task sizes");
  const TrainConfig cfg = resolve_config(common);
  const json inputs = {{"seed", args.seed},
                       {"gaze_sentences", args.gaze_sentences},
                       {"readers", args.readers},
                       {"keyword_instances", args.keyword_instances},
                       {"pair_instances", args.pair_instances},
                       {"test_size", args.test_size}};
  const fs::path dir = open_run_dir(common, "make-synthetic", cfg, inputs, args.seed);
  const corpus::SyntheticConfig sc = synthetic_config(args);
  const corpus::SyntheticSuite suite = corpus::make_synthetic_suite(args.seed, sc);
  corpus::save_gaze_corpus(dir / "gaze.tsv", suite.gaze);
  const std::pair<const char*, const std::vector<corpus::DatasetRow>*> tasks[] = {
      {"keyword", &suite.keyword}, {"pair", &suite.pair}};
  for (const auto& [name, rows] : tasks) {
    const corpus::DatasetSpec spec =
        std::string(name) == "keyword" ? corpus::keyword_spec() : corpus::pair_spec();
    std::vector<corpus::DatasetRow> pool, test;
    split_tail(*rows, args.test_size, pool, test);
    corpus::save_dataset(dir / (std::string(name) + ".tsv"), pool, spec);
    corpus::save_dataset(dir / (std::string(name) + "_test.tsv"), test, spec);
  }
  const corpus::MarkovSaccadeModel& m = sc.saccades;
  double nll = 0;
  std::size_t steps = 0;
  for (const auto& r : suite.gaze) {
    const auto [n, s] = m.path_nll(r.fixations, corpus::word_count(r.text));
    nll += n;
    steps += s;
  }
  const json stats = {{"gaze_records", suite.gaze.size()},
                      {"move_entropy_nats", m.move_entropy()},
                      {"process_nll_per_step", nll / static_cast<double>(steps)}};
  write_text(dir / "stats.json", stats.dump(2) + "\n");
  std::cout << dir.string() << "\n";
  return 0;
}

int pretrain_gaze(const Common& common, const PretrainArgs& args) {
  const TrainConfig cfg = resolve_config(common);
  std::vector<corpus::GazeRecord> records;
  json inputs = {{"dev_fraction", args.dev_fraction}};
  if (args.corpus.empty()) {
    SyntheticArgs s;
    s.seed = args.synthetic_seed;
    records = corpus::make_synthetic_suite(s.seed, synthetic_config(s)).gaze;
    inputs["synthetic_seed"] = args.synthetic_seed;
  } else {
    records = corpus::load_gaze_corpus(args.corpus);
    inputs["corpus"] = args.corpus;
    inputs["corpus_hash"] = file_hash(args.corpus);
  }
  if (!args.vocab.empty()) {
    inputs["vocab"] = args.vocab;
    inputs["vocab_hash"] = file_hash(args.vocab);
  }
  const fs::path dir = open_run_dir(common, "pretrain-gaze", cfg, inputs, cfg.seed);
  textenc::Vocab vocab;
  if (!args.vocab.empty()) {
    vocab = textenc::Vocab::load(args.vocab);
  } else {
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.text);
    vocab = textenc::Vocab::build(texts, cfg.vocab_size);
  }
  pretrain_into(dir, cfg, records, vocab, args.dev_fraction);
  std::cout << dir.string() << "\n";
  return 0;
}

int train(const Common& common, const TaskArgs& task, const SplitArgs& split) {
  json inputs = {{"data_seed", split.data_seed}};
  if (split.k) inputs["k"] = *split.k;
  Prepared p = prepare(common, task, "train", inputs);
  const RunRequest request = base_request(p.data.pool.size(), split, task.dev_size, p.cfg);
  const RunFn run = evalkit::make_training_run(
      p.data, trainer_options(generator_checkpoint(task, p.loaded, p.cfg, p.vocab, p.dir,
                                                   p.cfg.pretrained_generator)));
  const RunOutcome outcome = run(request);
  write_run(p.dir, request, outcome);
  std::cout << "test " << corpus::to_string(p.data.spec.metric) << " ";
  if (outcome.test.value) std::cout << *outcome.test.value << "\n";
  else std::cout << "undefined (" << outcome.test.error << ")\n";
  std::cout << p.dir.string() << "\n";
  return 0;
}

int evaluate(const Common& common, const EvaluateArgs& args) {
  const fs::path run = args.run;
  const json manifest = read_manifest(run);
  if (manifest.at("verb") != "train")
    throw UsageError("--run must point at a train run directory: " + run.string());
  TrainConfig cfg = config_from_json(manifest.at("config"));
  if (args.n_scanpaths) cfg.n_scanpaths = *args.n_scanpaths;
  cfg.validate();
  const TaskArgs task = task_from_json(manifest.at("inputs").at("task"));
  const LoadedTask loaded = load_task(task);
  const textenc::Vocab vocab = textenc::Vocab::load(run / "vocab.txt");
  const evalkit::TaskData data = task_data(loaded, vocab, cfg);
  augmentor::JointModel model = augmentor::JointModel::create(
      trainkit::joint_config(cfg, trainkit::task_spec(data.spec)), cfg.seed);
  diffcore::load_checkpoint(run / "model.ckpt", model.parameters());

  const std::string ckpt = (run / "model.ckpt").string();
  const json inputs = {{"run", run.string()}, {"model_hash", file_hash(ckpt)}, {"task", task_json(task)}};
  const fs::path dir = open_run_dir(common, "evaluate", cfg, inputs, cfg.seed);
  const auto outputs =
      evalkit::predict_all(model, data.test, cfg.n_scanpaths, evalkit::eval_sample_seed(cfg));
  std::vector<double> labels;
  std::string predictions;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    labels.push_back(data.test[i].label);
    predictions += json{{"id", data.test[i].id}, {"label", data.test[i].label}, {"outputs", outputs[i]}}
                       .dump() +
                   "\n";
  }
  const evalkit::MetricValue value = evalkit::compute_metric(data.spec.metric, outputs, labels);
  evalkit::EvalReport report;
  report.task = data.spec.task;
  report.metric = data.spec.metric;
  report.config = evalkit::config_echo(cfg);
  report.add("test", value.value, value.error);
  write_text(dir / "predictions.jsonl", predictions);
  write_reports(dir, {"evaluate", {report}});
  return 0;
}

int generate(const Common& common, const GenerateArgs& args) {
  const fs::path source = args.pretrained;
  const json manifest = read_manifest(source);
  const TrainConfig cfg = config_from_json(manifest.at("config"));
  const textenc::Vocab vocab = textenc::Vocab::load(source / "vocab.txt");
  trainkit::GazeModel model = trainkit::GazeModel::create(generator_config(cfg), cfg.seed);
  diffcore::load_checkpoint(source / "generator.ckpt", model.parameters());

  std::vector<std::pair<std::string, std::string>> sentences;  // id, text
  const std::string content = diffcore::read_file_bytes(args.input);
  if (content.rfind("sentence_id\t", 0) == 0) {
    std::set<std::string> seen;
    for (const auto& r : corpus::parse_gaze_corpus(content, args.input))
      if (seen.insert(r.sentence_id).second) sentences.emplace_back(r.sentence_id, r.text);
  } else {
    std::istringstream lines(content);
    std::size_t n = 0;
    for (std::string line; std::getline(lines, line);) {
      ++n;
      if (corpus::word_count(line) > 0) sentences.emplace_back("s" + std::to_string(n), line);
    }
  }
  if (sentences.empty()) throw std::invalid_argument(args.input + ": no sentences");

  const json inputs = {{"pretrained", source.string()},
                       {"generator_hash", file_hash((source / "generator.ckpt").string())},
                       {"input", args.input},
                       {"input_hash", file_hash(args.input)},
                       {"samples", args.samples},
                       {"seed", args.seed}};
  const fs::path dir = open_run_dir(common, "generate", cfg, inputs, args.seed);
  std::string out;
  const diffcore::NoGradGuard no_grad;
  for (const auto& [id, text] : sentences) {
    const textenc::EncodedText enc = textenc::tokenize(text, std::nullopt, vocab, cfg.max_len);
    const diffcore::Tensor states = model.word_states(enc, nullptr);
    for (std::size_t k = 0; k < args.samples; ++k) {
      diffcore::Rng rng(args.seed, augmentor::scanpath_stream(args.seed, id, k));
      gazegen::GeneratorPolicy policy(model.generator(), states);
      const gazegen::Scanpath path =
          gazegen::sample_hard(policy, rng, gazegen::default_max_fixations(enc.word_count()));
      out += json{{"sentence_id", id}, {"fixations", path.fixations}, {"stopped", path.stopped}}.dump() +
             "\n";
    }
  }
  write_text(dir / "scanpaths.jsonl", out);
  std::cout << sentences.size() * args.samples << " scanpaths\n" << dir.string() << "\n";
  return 0;
}

int sweep(const Common& common, const TaskArgs& task, const SplitArgs& split,
          const ProtocolArgs& protocol) {
  json inputs = {{"counts", protocol.counts}, {"seeds", protocol.seeds}, {"data_seed", split.data_seed}};
  if (split.k) inputs["k"] = *split.k;
  Prepared p = prepare(common, task, "sweep", inputs);
  const RunFn run = recording(
      evalkit::make_training_run(
          p.data, trainer_options(generator_checkpoint(task, p.loaded, p.cfg, p.vocab, p.dir,
                                                       p.cfg.pretrained_generator))),
      p.dir / "runs");
  const RunRequest base = base_request(p.data.pool.size(), split, task.dev_size, p.cfg);
  const auto evaluate_fn =
      over_seeds(base, run, protocol.seeds, common.jobs, p.data,
                 [](const TrainConfig& c) { return "n" + std::to_string(c.n_scanpaths); });
  write_reports(p.dir, evalkit::sweep_scanpaths(protocol.counts, p.cfg, evaluate_fn));
  return 0;
}

int lowresource(const Common& common, const TaskArgs& task, const ProtocolArgs& protocol) {
  Prepared p = prepare(common, task, "lowresource",
                       {{"ks", protocol.ks}, {"data_seeds", protocol.data_seeds}});
  for (std::size_t k : protocol.ks)
    for (std::uint64_t seed : protocol.data_seeds)
      write_text(p.dir / "splits" / ("k" + std::to_string(k) + "-seed" + std::to_string(seed) + ".json"),
                 corpus::split_manifest_json(corpus::low_resource_split(p.data.pool.size(), k, seed)));
  const RunFn run = recording(
      evalkit::make_training_run(
          p.data, trainer_options(generator_checkpoint(task, p.loaded, p.cfg, p.vocab, p.dir,
                                                       p.cfg.pretrained_generator))),
      p.dir / "runs");
  const auto reports =
      evalkit::run_lowresource(p.data.pool.size(), protocol.ks, protocol.data_seeds, p.cfg,
                               p.data.spec.task, p.data.spec.metric, run, common.jobs);
  write_reports(p.dir, {"lowresource", reports});
  return 0;
}

int crossval(const Common& common, const TaskArgs& task, const ProtocolArgs& protocol) {
  Prepared p = prepare(common, task, "crossval", {{"folds", protocol.folds}});
  write_text(p.dir / "folds.json",
             corpus::kfold_manifest_json(corpus::kfold(p.data.pool.size(), protocol.folds, p.cfg.seed),
                                         protocol.folds, p.cfg.seed));
  const RunFn run = recording(
      evalkit::make_training_run(
          p.data, trainer_options(generator_checkpoint(task, p.loaded, p.cfg, p.vocab, p.dir,
                                                       p.cfg.pretrained_generator))),
      p.dir / "runs");
  const auto report = evalkit::run_crossval(p.data.pool.size(), p.cfg, p.data.spec.task,
                                            p.data.spec.metric, run, protocol.folds, common.jobs);
  write_reports(p.dir, {"crossval", {report}});
  return 0;
}

int ablate(const Common& common, const TaskArgs& task, const SplitArgs& split,
           const ProtocolArgs& protocol) {
  json inputs = {{"seeds", protocol.seeds}, {"data_seed", split.data_seed}};
  if (split.k) inputs["k"] = *split.k;
  Prepared p = prepare(common, task, "ablate", inputs);
  const RunFn run = recording(
      evalkit::make_training_run(
          p.data, trainer_options(generator_checkpoint(task, p.loaded, p.cfg, p.vocab, p.dir, true))),
      p.dir / "runs");
  const RunRequest base = base_request(p.data.pool.size(), split, task.dev_size, p.cfg);
  const auto evaluate_fn = over_seeds(base, run, protocol.seeds, common.jobs, p.data,
                                      [](const TrainConfig& c) -> std::string {
                                        if (c.freeze_generator) return "frozen";
                                        return c.pretrained_generator ? "full" : "scratch";
                                      });
  write_reports(p.dir, evalkit::run_ablations(p.cfg, evaluate_fn));
  return 0;
}

int report(const Common& common, const ReportArgs& args) {
  if (args.inputs.empty()) throw UsageError("report needs at least one --input");
  std::string csv;
  json files = json::object();
  for (const auto& path : args.inputs) {
    const std::string text = diffcore::read_file_bytes(path);
    files[path] = hex64(diffcore::fnv1a64(text));
    const json j = json::parse(text);
    const evalkit::ReportSet set = j.contains("reports")
                                       ? evalkit::report_set_from_json(text)
                                       : evalkit::ReportSet{"report", {evalkit::report_from_json(text)}};
    const std::string part = evalkit::to_csv(set);
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
  }
  const TrainConfig cfg = resolve_config(common);
  const fs::path dir = open_run_dir(common, "report", cfg, {{"files", files}}, cfg.seed);
  write_text(dir / "report.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace gazenlu::cli
