#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && GAZENLU_RUNS=runs '" GAZENLU_CLI_PATH "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Result r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string last_line(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  const auto pos = s.rfind('\n');
  return pos == std::string::npos ? s : s.substr(pos + 1);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gazenlu-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2, help with 0") {
  const fs::path dir = scratch("usage");
  CHECK(run(dir, "").code == 2);
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "train --no-such-flag").code == 2);
  CHECK(run(dir, "evaluate").code == 2);
  const Result help = run(dir, "--help");
  CHECK(help.code == 0);
  for (const char* verb : {"build-vocab", "make-synthetic", "pretrain-gaze", "train", "evaluate", "generate",
                           "sweep", "lowresource", "crossval", "ablate", "report"})
    CHECK(help.output.find(verb) != std::string::npos);
}

TEST_CASE("invalid configuration values fail with 1 and name the key") {
  const fs::path dir = scratch("badcfg");
  const Result r = run(dir, "train --width 16 --heads 3");
  CHECK(r.code == 1);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("make-synthetic writes the corpus, tasks and a manifest") {
  const fs::path dir = scratch("synth");
  const Result r = run(dir, "make-synthetic --gaze-sentences 10 --keyword-instances 60 --pair-instances 40 "
                            "--test-size 10 --out data");
  REQUIRE(r.code == 0);
  for (const char* f : {"gaze.tsv", "keyword.tsv", "keyword_test.tsv", "pair.tsv", "pair_test.tsv",
                        "stats.json", "manifest.json"})
    CHECK(fs::exists(dir / "data" / f));
  const auto manifest = nlohmann::json::parse(slurp(dir / "data" / "manifest.json"));
  CHECK(manifest.at("verb") == "make-synthetic");
  CHECK(manifest.contains("config"));
  CHECK(run(dir, "make-synthetic --keyword-instances 60 --test-size 60 --out bad").code != 0);
  CHECK_FALSE(fs::exists(dir / "bad" / "gaze.tsv"));
}

TEST_CASE("build-vocab respects the size and default run directory naming") {
  const fs::path dir = scratch("vocab");
  REQUIRE(run(dir, "make-synthetic --gaze-sentences 10 --keyword-instances 60 --pair-instances 40 "
                   "--test-size 10 --out data")
              .code == 0);
  const Result r = run(dir, "build-vocab --corpus data/gaze.tsv --dataset data/keyword.tsv --size 80");
  REQUIRE(r.code == 0);
  const fs::path out = dir / last_line(r.output);
  CHECK(out.parent_path().filename() == "runs");
  CHECK(out.filename().string().rfind("build-vocab-", 0) == 0);
  const std::string vocab = slurp(out / "vocab.txt");
  CHECK(std::count(vocab.begin(), vocab.end(), '\n') <= 80);
  CHECK(vocab.rfind("[CLS]\n[SEP]\n[PAD]\n[UNK]\n", 0) == 0);
}

TEST_CASE("pretrain, generate and a mismatched model shape") {
  const fs::path dir = scratch("gen");
  REQUIRE(run(dir, "make-synthetic --gaze-sentences 12 --keyword-instances 60 --pair-instances 40 "
                   "--test-size 10 --out data")
              .code == 0);
  const std::string model = " --width 8 --hidden 8 --layers 1 --heads 2 --pretrain-epochs 1";
  const Result pre = run(dir, "pretrain-gaze --corpus data/gaze.tsv" + model);
  REQUIRE(pre.code == 0);
  const std::string pdir = last_line(pre.output);
  for (const char* f : {"generator.ckpt", "vocab.txt", "pretrain_epochs.jsonl"}) CHECK(fs::exists(dir / pdir / f));

  std::ofstream(dir / "lines.txt") << "one two three\nfour five\n";
  const Result gen = run(dir, "generate --pretrained " + pdir + " --input lines.txt --samples 3 --seed 2");
  REQUIRE(gen.code == 0);
  const std::string paths = slurp(dir / last_line(gen.output) / "scanpaths.jsonl");
  CHECK(std::count(paths.begin(), paths.end(), '\n') == 6);
  const auto first = nlohmann::json::parse(paths.substr(0, paths.find('\n')));
  for (std::size_t f : first.at("fixations").get<std::vector<std::size_t>>()) CHECK(f < 3);

  const Result mismatch = run(dir, "train --task keyword --pretrained " + pdir +
                                       " --width 8 --hidden 8 --layers 2 --heads 2 --k 20");
  CHECK(mismatch.code != 0);
  CHECK(mismatch.output.find("layers") != std::string::npos);
}

TEST_CASE("config file and flag overrides") {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "run.cfg") << "width=8\nhidden=8\nlayers=1\nheads=2\npretrain_epochs=1\n";
  REQUIRE(run(dir, "make-synthetic --gaze-sentences 8 --keyword-instances 60 --pair-instances 40 "
                   "--test-size 10 --out data")
              .code == 0);
  const Result pre = run(dir, "pretrain-gaze --corpus data/gaze.tsv --config run.cfg --hidden 16");
  REQUIRE(pre.code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / last_line(pre.output) / "manifest.json"));
  CHECK(manifest.at("config").at("hidden") == "16");
  CHECK(manifest.at("config").at("width") == "8");
}
