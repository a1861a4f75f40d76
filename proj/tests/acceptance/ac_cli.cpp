#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "gazenlu/diffcore/checkpoint.hpp"
#include "harness.hpp"

#ifndef GAZENLU_CLI_PATH
#error "GAZENLU_CLI_PATH must name the gazenlu executable"
#endif

namespace acceptance {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  int status = 0;
  std::string output;
  std::string last_line;
};

Invocation invoke(const fs::path& root, const std::string& args) {
  const std::string command = "cd '" + root.string() + "' && GAZENLU_RUNS=runs '" GAZENLU_CLI_PATH "' " +
                              args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  Invocation inv;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) inv.output += buf;
  inv.status = pclose(pipe);
  std::string trimmed = inv.output;
  while (!trimmed.empty() && trimmed.back() == '\n') trimmed.pop_back();
  inv.last_line = trimmed.substr(trimmed.rfind('\n') == std::string::npos ? 0 : trimmed.rfind('\n') + 1);
  return inv;
}

// Relative path -> file bytes, manifests excluded (they carry a timestamp).
std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (entry.is_directory()) {
      files[rel + "/"] = "";
    } else if (entry.path().filename() != "manifest.json") {
      files[rel] = gazenlu::diffcore::read_file_bytes(entry.path());
    }
  }
  return files;
}

}  // namespace

Outcome ac9_determinism() {
  Outcome out;
  const std::string model =
      " --width 16 --hidden 16 --layers 1 --heads 2 --max-epochs 2 --patience 1 --pretrain-epochs 2"
      " --n-scanpaths 2";
  const std::string task =
      " --data data/keyword.tsv --test data/keyword_test.tsv --metric accuracy";
  const fs::path base = fs::temp_directory_path() / "gazenlu-ac9";
  fs::remove_all(base);

  std::vector<std::map<std::string, std::string>> trees;
  for (int round = 0; round < 2; ++round) {
    const fs::path root = base / ("root" + std::to_string(round));
    fs::create_directories(root);
    const auto step = [&](const std::string& name, const std::string& args) {
      const Invocation inv = invoke(root, args);
      if (inv.status != 0)
        throw std::runtime_error(name + " exited with " + std::to_string(inv.status) + ":\n" + inv.output);
      return inv.last_line;
    };
    step("make-synthetic",
         "make-synthetic --gaze-sentences 60 --keyword-instances 400 --pair-instances 200 "
         "--test-size 100 --out data");
    const std::string pre = step("pretrain-gaze", "pretrain-gaze --corpus data/gaze.tsv" + model);
    const std::string run =
        step("train", "train" + task + " --pretrained " + pre + " --k 100 --data-seed 222" + model);
    const std::string eval = step("evaluate", "evaluate --run " + run);
    step("generate", "generate --pretrained " + pre + " --input data/gaze.tsv --samples 2 --seed 5");
    const std::string low = step("lowresource", "lowresource" + task + " --pretrained " + pre +
                                                    " --ks 50,100 --data-seeds 111,222 --jobs 2" + model);
    step("report", "report --input " + low + "/report.json --input " + eval + "/report.json");
    trees.push_back(snapshot_tree(root));
  }

  out.info(fmt("%zu paths per tree", trees[0].size()));
  std::size_t differing = 0;
  std::string first;
  for (const auto& [path, bytes] : trees[0]) {
    const auto it = trees[1].find(path);
    if (it == trees[1].end() || it->second != bytes) {
      if (!differing++) first = path;
    }
  }
  for (const auto& [path, bytes] : trees[1])
    if (!trees[0].count(path) && !differing++) first = path;
  out.require(trees[0].size() > 20, "both chains produced their run directories");
  out.require(differing == 0, differing ? fmt("%zu paths differ, first %s", differing, first.c_str())
                                        : "repeated CLI chain is byte-identical outside manifests");
  fs::remove_all(base);
  return out;
}

}  // namespace acceptance
