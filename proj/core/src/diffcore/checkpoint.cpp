#include "gazenlu/diffcore/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gazenlu/diffcore/rng.hpp"

namespace gazenlu::diffcore {
namespace {

void put_f32_le(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string_view next_line(std::string_view bytes, std::size_t& pos) {
  const std::size_t end = bytes.find('\n', pos);
  if (end == std::string_view::npos) throw CheckpointError("checkpoint: truncated header");
  std::string_view line = bytes.substr(pos, end - pos);
  pos = end + 1;
  return line;
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw CheckpointError("checkpoint: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string serialize_checkpoint(const ParamList& params) {
  std::string header = std::string(kCheckpointMagic) + "\n";
  header += "tensors " + std::to_string(params.size()) + "\n";
  std::size_t offset = 0;
  for (const NamedTensor& e : params.entries()) {
    header += "tensor " + e.name + " 2 " + std::to_string(e.tensor->rows()) + " " +
              std::to_string(e.tensor->cols()) + " " + std::to_string(offset) + "\n";
    offset += 4 * e.tensor->size();
  }
  header += "payload " + std::to_string(offset) + "\n";
  std::string out = std::move(header);
  out.reserve(out.size() + offset);
  for (const NamedTensor& e : params.entries())
    for (double v : e.tensor->values()) put_f32_le(out, static_cast<float>(v));
  return out;
}

std::vector<CheckpointTensor> parse_checkpoint(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_line(bytes, pos) != kCheckpointMagic)
    throw CheckpointError("checkpoint: missing '" + std::string(kCheckpointMagic) + "' header");
  auto words = split_words(next_line(bytes, pos));
  if (words.size() != 2 || words[0] != "tensors")
    throw CheckpointError("checkpoint: expected 'tensors <count>'");
  const std::size_t count = parse_size(words[1]);
  std::vector<CheckpointTensor> tensors;
  for (std::size_t i = 0; i < count; ++i) {
    words = split_words(next_line(bytes, pos));
    if (words.size() < 4 || words[0] != "tensor")
      throw CheckpointError("checkpoint: malformed tensor line " + std::to_string(i));
    CheckpointTensor t;
    t.name = words[1];
    const std::size_t rank = parse_size(words[2]);
    if (words.size() != 4 + rank)
      throw CheckpointError("checkpoint: rank/extent mismatch for " + t.name);
    for (std::size_t r = 0; r < rank; ++r) t.shape.push_back(parse_size(words[3 + r]));
    t.offset = parse_size(words[3 + rank]);
    tensors.push_back(std::move(t));
  }
  words = split_words(next_line(bytes, pos));
  if (words.size() != 2 || words[0] != "payload")
    throw CheckpointError("checkpoint: expected 'payload <bytes>'");
  const std::size_t payload = parse_size(words[1]);
  if (bytes.size() - pos != payload)
    throw CheckpointError("checkpoint: payload is " + std::to_string(bytes.size() - pos) +
                          " bytes, header declares " + std::to_string(payload));
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (CheckpointTensor& t : tensors) {
    std::size_t n = 1;
    for (std::size_t e : t.shape) n *= e;
    if (t.offset + 4 * n > payload)
      throw CheckpointError("checkpoint: tensor " + t.name + " runs past the payload");
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) t.values[k] = get_f32_le(base + t.offset + 4 * k);
  }
  return tensors;
}

void apply_checkpoint(const std::vector<CheckpointTensor>& tensors, const ParamList& params) {
  if (tensors.size() != params.size())
    throw CheckpointError("checkpoint: has " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const CheckpointTensor& src = tensors[i];
    const NamedTensor& dst = params.entries()[i];
    if (src.name != dst.name)
      throw CheckpointError("checkpoint: tensor " + std::to_string(i) + " is '" + src.name +
                            "', model expects '" + dst.name + "'");
    if (src.shape.size() != 2 || src.shape[0] != dst.tensor->rows() ||
        src.shape[1] != dst.tensor->cols())
      throw CheckpointError("checkpoint: shape mismatch for " + src.name + ", model expects " +
                            dst.tensor->shape_string());
    auto out = dst.tensor->mutable_values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(src.values[k]);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  write_file_bytes(path, serialize_checkpoint(params));
}

void load_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  apply_checkpoint(parse_checkpoint(read_file_bytes(path)), params);
}

std::uint64_t checkpoint_hash(const ParamList& params) {
  return fnv1a64(serialize_checkpoint(params));
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[value & 0xFu];
    value >>= 4;
  }
  return s;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace gazenlu::diffcore
