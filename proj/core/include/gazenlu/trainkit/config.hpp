#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gazenlu/augmentor/joint_model.hpp"

namespace gazenlu::trainkit {

/// Every knob of a run. Serialized as flat `key=value` lines in field order.
struct TrainConfig {
  // optimisation
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  // scanpaths
  double temperature = 0.5;
  std::string gumbel_mode = "straight_through";
  std::size_t n_scanpaths = 3;
  bool freeze_generator = false;
  bool pretrained_generator = true;
  std::string source = "generator";  // or "identity" (text-only baseline)
  // pretraining
  double pretrain_lr = 1e-3;
  std::size_t pretrain_epochs = 20;
  // model
  std::size_t vocab_size = 400;
  std::size_t width = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t hidden = 64;
  std::size_t max_len = 64;
  std::size_t max_offset_len = 16;
  double dropout = 0.1;
  bool share_text_encoder = false;

  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
KeyValues parse_key_values(std::string_view text, const std::string& source);
/// Applies known keys; an unknown key or malformed value throws
/// std::invalid_argument naming the key.
void apply_key_values(TrainConfig& config, const KeyValues& values);
std::string to_key_values(const TrainConfig& config);
std::vector<std::string> config_keys();
TrainConfig load_config(const std::filesystem::path& path);

/// FNV-1a of the canonical key=value form.
std::uint64_t config_hash(const TrainConfig& config);

/// Joint-model configuration for a task.
augmentor::JointConfig joint_config(const TrainConfig& config, const augmentor::TaskSpec& task);

}  // namespace gazenlu::trainkit
