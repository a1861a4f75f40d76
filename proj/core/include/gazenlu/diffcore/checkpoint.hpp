#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gazenlu/diffcore/layers.hpp"

namespace gazenlu::diffcore {

// Layout:
//   GAZENLU-CKPT v1
//   tensors <count>
//   tensor <name> <rank> <extent>... <byte offset>     (one line per tensor)
//   payload <total bytes>
//   <little-endian IEEE-754 float32 payloads in declaration order>

inline constexpr std::string_view kCheckpointMagic = "GAZENLU-CKPT v1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::vector<float> values;
};

std::string serialize_checkpoint(const ParamList& params);
std::vector<CheckpointTensor> parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ParamList& params);
/// Loads values into `params`; names, order and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);
void apply_checkpoint(const std::vector<CheckpointTensor>& tensors, const ParamList& params);

/// FNV-1a of the serialized checkpoint bytes.
std::uint64_t checkpoint_hash(const ParamList& params);
std::string hex64(std::uint64_t value);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gazenlu::diffcore
