#include <deque>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gazenlu/corpus/tsv.hpp"
#include "verbs.hpp"

namespace {

using namespace gazenlu;

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

/// One --flag per config key (underscores become dashes).
class ConfigFlags {
 public:
  void attach(CLI::App* app, cli::Common& common) {
    app->add_option("--config", common.config_path, "key=value configuration file")
        ->check(CLI::ExistingFile);
    for (const std::string& key : trainkit::config_keys()) {
      std::string flag = key;
      for (char& c : flag)
        if (c == '_') c = '-';
      auto& slot = values_.emplace_back(key, std::string{});
      options_.push_back(app->add_option("--" + flag, slot.second, "config: " + key));
    }
  }
  void collect(cli::Common& common) const {
    for (std::size_t i = 0; i < options_.size(); ++i)
      if (options_[i]->count() > 0) common.overrides[values_[i].first] = values_[i].second;
  }

 private:
  std::deque<std::pair<std::string, std::string>> values_;
  std::vector<CLI::Option*> options_;
};

void add_out(CLI::App* app, cli::Common& common) {
  app->add_option("--out", common.out, "run directory (default: $GAZENLU_RUNS/<verb>-<hash>-s<seed>)");
}

void add_task(CLI::App* app, cli::TaskArgs& t) {
  app->add_option("--task", t.task, "task name; keyword and pair are built-in synthetic tasks")
      ->capture_default_str();
  app->add_option("--data", t.data, "training pool TSV")->check(CLI::ExistingFile);
  app->add_option("--test", t.test, "held-out test TSV")->check(CLI::ExistingFile);
  app->add_option("--metric", t.metric, "accuracy, f1, matthews, spearman or auc");
  app->add_flag("--pair", t.pair, "rows carry a second sentence");
  app->add_option("--n-classes", t.n_classes)->capture_default_str();
  app->add_option("--label-range", t.label_range, "min,max for regression labels");
  app->add_option("--synthetic-seed", t.synthetic_seed)->capture_default_str();
  app->add_flag("--random-labels", t.random_labels, "replace training labels with coin flips");
  app->add_option("--pretrained", t.pretrained, "pretrain-gaze run directory")
      ->check(CLI::ExistingDirectory);
  app->add_option("--vocab", t.vocab)->check(CLI::ExistingFile);
  app->add_option("--dev-size", t.dev_size, "dev rows when --k is not given")->capture_default_str();
}

void add_split(CLI::App* app, cli::SplitArgs& s) {
  app->add_option("--k", s.k, "low-resource training size");
  app->add_option("--data-seed", s.data_seed)->capture_default_str();
}

void add_jobs(CLI::App* app, cli::Common& common) {
  app->add_option("--jobs", common.jobs, "parallel runs")->check(CLI::PositiveNumber)->capture_default_str();
}

std::string joined_argv(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) out += (i ? " " : "") + std::string(argv[i]);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazenlu: scanpath-augmented language understanding"};
  app.require_subcommand(1);

  cli::Common common;
  common.command_line = joined_argv(argc, argv);
  ConfigFlags config_flags;

  cli::VocabArgs vocab_args;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "build a subword vocabulary");
  vocab_cmd->add_option("--corpus", vocab_args.corpora, "gaze corpus TSV")->check(CLI::ExistingFile);
  vocab_cmd->add_option("--dataset", vocab_args.datasets, "task TSV")->check(CLI::ExistingFile);
  vocab_cmd->add_flag("--pair", vocab_args.pair);
  vocab_cmd->add_option("--size", vocab_args.size)->capture_default_str();
  add_out(vocab_cmd, common);

  cli::SyntheticArgs synth_args;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "write the synthetic gaze corpus and tasks");
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--gaze-sentences", synth_args.gaze_sentences)->capture_default_str();
  synth_cmd->add_option("--readers", synth_args.readers)->capture_default_str();
  synth_cmd->add_option("--keyword-instances", synth_args.keyword_instances)->capture_default_str();
  synth_cmd->add_option("--pair-instances", synth_args.pair_instances)->capture_default_str();
  synth_cmd->add_option("--test-size", synth_args.test_size)->capture_default_str();
  add_out(synth_cmd, common);

  cli::PretrainArgs pretrain_args;
  auto* pretrain_cmd = app.add_subcommand("pretrain-gaze", "pretrain the scanpath generator");
  pretrain_cmd->add_option("--corpus", pretrain_args.corpus, "gaze corpus TSV (default: synthetic)")
      ->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--synthetic-seed", pretrain_args.synthetic_seed)->capture_default_str();
  pretrain_cmd->add_option("--vocab", pretrain_args.vocab)->check(CLI::ExistingFile);
  pretrain_cmd->add_option("--dev-fraction", pretrain_args.dev_fraction)->capture_default_str();
  add_out(pretrain_cmd, common);

  cli::TaskArgs task;
  cli::SplitArgs split;
  cli::ProtocolArgs protocol;

  auto* train_cmd = app.add_subcommand("train", "joint training on one split");
  add_task(train_cmd, task);
  add_split(train_cmd, split);
  add_out(train_cmd, common);

  cli::EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a trained model on its test set");
  eval_cmd->add_option("--run", eval_args.run, "train run directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--n-scanpaths", eval_args.n_scanpaths, "override the scanpath count");
  add_out(eval_cmd, common);

  cli::GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "sample scanpaths from a pretrained generator");
  gen_cmd->add_option("--pretrained", gen_args.pretrained, "pretrain-gaze run directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--input", gen_args.input, "sentences, one per line, or a gaze corpus TSV")
      ->required()
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--samples", gen_args.samples)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", gen_args.seed)->capture_default_str();
  add_out(gen_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep", "scanpath-count sweep");
  add_task(sweep_cmd, task);
  add_split(sweep_cmd, split);
  sweep_cmd->add_option("--counts", protocol.counts)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--seeds", protocol.seeds, "training seeds")->delimiter(',')->capture_default_str();
  add_jobs(sweep_cmd, common);
  add_out(sweep_cmd, common);

  auto* low_cmd = app.add_subcommand("lowresource", "low-resource protocol over K and data seeds");
  add_task(low_cmd, task);
  low_cmd->add_option("--ks", protocol.ks)->delimiter(',')->capture_default_str();
  low_cmd->add_option("--data-seeds", protocol.data_seeds)->delimiter(',')->capture_default_str();
  add_jobs(low_cmd, common);
  add_out(low_cmd, common);

  auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
  add_task(cv_cmd, task);
  cv_cmd->add_option("--folds", protocol.folds)->check(CLI::Range(3, 1000))->capture_default_str();
  add_jobs(cv_cmd, common);
  add_out(cv_cmd, common);

  auto* ablate_cmd = app.add_subcommand("ablate", "full, frozen and scratch generator runs");
  add_task(ablate_cmd, task);
  add_split(ablate_cmd, split);
  ablate_cmd->add_option("--seeds", protocol.seeds, "training seeds")->delimiter(',')->capture_default_str();
  add_jobs(ablate_cmd, common);
  add_out(ablate_cmd, common);

  cli::ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "merge report.json files into CSV");
  report_cmd->add_option("--input", report_args.inputs, "report.json")
      ->required()
      ->check(CLI::ExistingFile);
  add_out(report_cmd, common);

  for (CLI::App* cmd : {pretrain_cmd, train_cmd, sweep_cmd, low_cmd, cv_cmd, ablate_cmd})
    config_flags.attach(cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }
  config_flags.collect(common);

  try {
    if (*vocab_cmd) return cli::build_vocab(common, vocab_args);
    if (*synth_cmd) return cli::make_synthetic(common, synth_args);
    if (*pretrain_cmd) return cli::pretrain_gaze(common, pretrain_args);
    if (*train_cmd) return cli::train(common, task, split);
    if (*eval_cmd) return cli::evaluate(common, eval_args);
    if (*gen_cmd) return cli::generate(common, gen_args);
    if (*sweep_cmd) return cli::sweep(common, task, split, protocol);
    if (*low_cmd) return cli::lowresource(common, task, protocol);
    if (*cv_cmd) return cli::crossval(common, task, protocol);
    if (*ablate_cmd) return cli::ablate(common, task, split, protocol);
    if (*report_cmd) return cli::report(common, report_args);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailureExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailureExit;
  }
  return kUsageExit;
}
