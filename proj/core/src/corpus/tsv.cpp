#include "gazenlu/corpus/tsv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gazenlu/diffcore/checkpoint.hpp"
#include "gazenlu/textenc/vocab.hpp"

namespace gazenlu::corpus {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(sep, pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> lines = split(content, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

MetricId parse_metric(std::string_view name) {
  if (name == "accuracy") return MetricId::accuracy;
  if (name == "f1") return MetricId::f1;
  if (name == "matthews") return MetricId::matthews;
  if (name == "spearman") return MetricId::spearman;
  if (name == "auc") return MetricId::auc;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

std::string to_string(MetricId id) {
  switch (id) {
    case MetricId::accuracy: return "accuracy";
    case MetricId::f1: return "f1";
    case MetricId::matthews: return "matthews";
    case MetricId::spearman: return "spearman";
    case MetricId::auc: return "auc";
  }
  return "?";
}

std::size_t word_count(std::string_view text) { return textenc::normalize_words(text).size(); }

std::vector<GazeRecord> parse_gaze_corpus(std::string_view content, const std::string& source) {
  const auto lines = lines_of(content);
  if (lines.empty() || lines[0] != "sentence_id\treader_id\ttext\tfixations")
    fail(source, 1, "expected header 'sentence_id<TAB>reader_id<TAB>text<TAB>fixations'");
  std::vector<GazeRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 4)
      fail(source, line, "expected 4 fields, found " + std::to_string(fields.size()));
    GazeRecord r{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), {}};
    if (r.sentence_id.empty()) fail(source, line, "empty sentence_id");
    const std::size_t words = word_count(r.text);
    if (words == 0) fail(source, line, "record " + r.sentence_id + " has no words");
    for (std::string_view tok : split(fields[3], ' ')) {
      if (tok.empty()) continue;
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        fail(source, line, "record " + r.sentence_id + ": bad fixation '" + std::string(tok) + "'");
      if (v >= words)
        fail(source, line, "record " + r.sentence_id + "/" + r.reader_id + ": fixation " +
                               std::to_string(v) + " outside " + std::to_string(words) + " words");
      r.fixations.push_back(v);
    }
    if (r.fixations.empty()) fail(source, line, "record " + r.sentence_id + " has no fixations");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<GazeRecord> load_gaze_corpus(const std::filesystem::path& path) {
  return parse_gaze_corpus(diffcore::read_file_bytes(path), path.string());
}

std::string format_gaze_corpus(const std::vector<GazeRecord>& records) {
  std::string out = "sentence_id\treader_id\ttext\tfixations\n";
  for (const GazeRecord& r : records) {
    out += r.sentence_id + '\t' + r.reader_id + '\t' + r.text + '\t';
    for (std::size_t i = 0; i < r.fixations.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(r.fixations[i]);
    }
    out += '\n';
  }
  return out;
}

void save_gaze_corpus(const std::filesystem::path& path, const std::vector<GazeRecord>& records) {
  diffcore::write_file_bytes(path, format_gaze_corpus(records));
}

std::vector<DatasetRow> parse_dataset(std::string_view content, const DatasetSpec& spec,
                                      const std::string& source) {
  const auto lines = lines_of(content);
  if (lines.empty()) fail(source, 1, "empty file");
  const auto header = split(lines[0], '\t');
  const bool has_id = !header.empty() && header[0] == "id";
  std::vector<std::string> expected;
  if (has_id) expected.push_back("id");
  expected.push_back("sentence1");
  if (spec.pair) expected.push_back("sentence2");
  expected.push_back("label");
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : "<TAB>") + e;
    fail(source, 1, "expected header '" + want + "'");
  }
  std::vector<DatasetRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto fields = split(lines[i], '\t');
    if (fields.size() != expected.size())
      fail(source, line, "expected " + std::to_string(expected.size()) + " fields, found " +
                             std::to_string(fields.size()));
    std::size_t f = 0;
    DatasetRow row;
    row.id = has_id ? std::string(fields[f++]) : spec.task + "-" + std::to_string(i - 1);
    row.sentence1 = std::string(fields[f++]);
    if (spec.pair) row.sentence2 = std::string(fields[f++]);
    const std::string_view label = fields[f];
    if (word_count(row.sentence1) == 0 || (row.sentence2 && word_count(*row.sentence2) == 0))
      fail(source, line, "empty sentence");
    if (spec.label_kind == LabelKind::classes) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
      if (ec != std::errc{} || ptr != label.data() + label.size() || v >= spec.n_classes)
        fail(source, line, "label '" + std::string(label) + "' is not a class of " +
                               std::to_string(spec.n_classes));
      row.label = static_cast<double>(v);
    } else {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
      if (ec != std::errc{} || ptr != label.data() + label.size() || !std::isfinite(v))
        fail(source, line, "label '" + std::string(label) + "' is not a number");
      if (v < spec.label_min || v > spec.label_max)
        fail(source, line, "label " + std::string(label) + " outside [" +
                               format_number(spec.label_min) + ", " +
                               format_number(spec.label_max) + "]");
      row.label = v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<DatasetRow> load_dataset(const std::filesystem::path& path, const DatasetSpec& spec) {
  return parse_dataset(diffcore::read_file_bytes(path), spec, path.string());
}

std::string format_dataset(const std::vector<DatasetRow>& rows, const DatasetSpec& spec) {
  std::string out = spec.pair ? "id\tsentence1\tsentence2\tlabel\n" : "id\tsentence1\tlabel\n";
  for (const DatasetRow& r : rows) {
    out += r.id + '\t' + r.sentence1 + '\t';
    if (spec.pair) out += r.sentence2.value_or("") + '\t';
    out += format_number(r.label) + '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRow>& rows,
                  const DatasetSpec& spec) {
  diffcore::write_file_bytes(path, format_dataset(rows, spec));
}

}  // namespace gazenlu::corpus
