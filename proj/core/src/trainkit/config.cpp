#include "gazenlu/trainkit/config.hpp"

#include <charconv>
#include <functional>
#include <stdexcept>

#include "gazenlu/diffcore/checkpoint.hpp"
#include "gazenlu/diffcore/rng.hpp"

namespace gazenlu::trainkit {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::invalid_argument("config: bad value '" + text + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: bad value '" + text + "' for " + key + " (true/false)");
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(const char* key, T TrainConfig::*member) {
  return {key,
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          },
          [key, member](TrainConfig& c, const std::string& v) {
            c.*member = parse_number<T>(key, v);
          }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [key, member](TrainConfig& c, const std::string& v) { c.*member = parse_bool(key, v); }};
}

Field string_field(const char* key, std::string TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return c.*member; },
          [member](TrainConfig& c, const std::string& v) { c.*member = v; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      number_field("lr", &TrainConfig::lr),
      number_field("batch_size", &TrainConfig::batch_size),
      number_field("max_epochs", &TrainConfig::max_epochs),
      number_field("patience", &TrainConfig::patience),
      number_field("weight_decay", &TrainConfig::weight_decay),
      number_field("seed", &TrainConfig::seed),
      number_field("temperature", &TrainConfig::temperature),
      string_field("gumbel_mode", &TrainConfig::gumbel_mode),
      number_field("n_scanpaths", &TrainConfig::n_scanpaths),
      bool_field("freeze_generator", &TrainConfig::freeze_generator),
      bool_field("pretrained_generator", &TrainConfig::pretrained_generator),
      string_field("source", &TrainConfig::source),
      number_field("pretrain_lr", &TrainConfig::pretrain_lr),
      number_field("pretrain_epochs", &TrainConfig::pretrain_epochs),
      number_field("vocab_size", &TrainConfig::vocab_size),
      number_field("width", &TrainConfig::width),
      number_field("layers", &TrainConfig::layers),
      number_field("heads", &TrainConfig::heads),
      number_field("hidden", &TrainConfig::hidden),
      number_field("max_len", &TrainConfig::max_len),
      number_field("max_offset_len", &TrainConfig::max_offset_len),
      number_field("dropout", &TrainConfig::dropout),
      bool_field("share_text_encoder", &TrainConfig::share_text_encoder),
  };
  return kFields;
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  require(lr > 0, "lr must be positive");
  require(pretrain_lr > 0, "pretrain_lr must be positive");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(patience >= 1, "patience must be at least 1");
  require(temperature > 0, "temperature must be positive");
  require(n_scanpaths >= 1, "n_scanpaths must be at least 1");
  require(weight_decay >= 0, "weight_decay must be non-negative");
  require(dropout >= 0 && dropout < 1, "dropout must lie in [0, 1)");
  require(width >= 1 && hidden >= 1 && heads >= 1 && width % heads == 0,
          "width must be a positive multiple of heads");
  require(max_len >= 4, "max_len must be at least 4");
  require(source == "generator" || source == "identity", "source must be generator or identity");
  gazegen::parse_gumbel_mode(gumbel_mode);
}

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_key_values(TrainConfig& config, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    for (const Field& f : fields())
      if (key == f.key) {
        f.set(config, value);
        found = true;
      }
    if (!found) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

std::string to_key_values(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + "=" + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

TrainConfig load_config(const std::filesystem::path& path) {
  TrainConfig c;
  apply_key_values(c, parse_key_values(diffcore::read_file_bytes(path), path.string()));
  c.validate();
  return c;
}

std::uint64_t config_hash(const TrainConfig& config) {
  return diffcore::fnv1a64(to_key_values(config));
}

augmentor::JointConfig joint_config(const TrainConfig& c, const augmentor::TaskSpec& task) {
  c.validate();
  augmentor::JointConfig j;
  j.encoder.vocab_size = c.vocab_size;
  j.encoder.width = c.width;
  j.encoder.layers = c.layers;
  j.encoder.heads = c.heads;
  j.encoder.max_len = c.max_len;
  j.encoder.dropout = c.dropout;
  j.generator.encoder = j.encoder;
  j.generator.hidden = c.hidden;
  j.generator.max_offset_len = c.max_offset_len;
  j.generator.max_words = c.max_len;
  j.generator.share_text_encoder = c.share_text_encoder;
  j.scan_hidden = c.hidden;
  j.scan_dropout = c.dropout;
  j.task = task;
  j.gumbel.temperature = c.temperature;
  j.gumbel.mode = gazegen::parse_gumbel_mode(c.gumbel_mode);
  j.source = c.source == "identity" ? augmentor::ScanpathSource::identity
                                    : augmentor::ScanpathSource::generator;
  j.freeze_generator = c.freeze_generator;
  return j;
}

}  // namespace gazenlu::trainkit
