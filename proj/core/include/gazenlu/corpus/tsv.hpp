#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gazenlu::corpus {

/// Malformed input; the message carries the source name and line number.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GazeRecord {
  std::string sentence_id;
  std::string reader_id;
  std::string text;  // space-separated words
  std::vector<std::size_t> fixations;

  friend bool operator==(const GazeRecord&, const GazeRecord&) = default;
};

enum class MetricId : std::uint8_t { accuracy, f1, matthews, spearman, auc };
MetricId parse_metric(std::string_view name);
std::string to_string(MetricId id);

enum class LabelKind : std::uint8_t { classes, real };

struct DatasetSpec {
  std::string task;
  bool pair = false;
  LabelKind label_kind = LabelKind::classes;
  std::size_t n_classes = 2;
  double label_min = 0.0;
  double label_max = 1.0;
  MetricId metric = MetricId::accuracy;
};

struct DatasetRow {
  std::string id;
  std::string sentence1;
  std::optional<std::string> sentence2;
  double label = 0.0;

  friend bool operator==(const DatasetRow&, const DatasetRow&) = default;
};

/// Header: sentence_id reader_id text fixations (tab separated).
std::vector<GazeRecord> parse_gaze_corpus(std::string_view content, const std::string& source);
std::vector<GazeRecord> load_gaze_corpus(const std::filesystem::path& path);
std::string format_gaze_corpus(const std::vector<GazeRecord>& records);
void save_gaze_corpus(const std::filesystem::path& path, const std::vector<GazeRecord>& records);

/// Header: [id] sentence1 [sentence2] label. Rows without an id column get
/// "<task>-<row>" ids.
std::vector<DatasetRow> parse_dataset(std::string_view content, const DatasetSpec& spec,
                                      const std::string& source);
std::vector<DatasetRow> load_dataset(const std::filesystem::path& path, const DatasetSpec& spec);
std::string format_dataset(const std::vector<DatasetRow>& rows, const DatasetSpec& spec);
void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRow>& rows,
                  const DatasetSpec& spec);

std::size_t word_count(std::string_view text);

}  // namespace gazenlu::corpus
