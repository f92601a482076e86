#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "autoreset/train/metrics.hpp"

namespace autoreset::harness {

/// Column names of metrics.csv, in MetricsRow field order.
const std::vector<std::string>& metrics_columns();
std::string metrics_header();

/// CSV text of one row (no newline). Doubles use %.17g so values round-trip;
/// absent optional fields are empty.
std::string format_csv_row(const train::MetricsRow& row);
/// One JSON object per row with the same keys; absent fields are null.
std::string format_json_row(const train::MetricsRow& row);

/// Appends rows to metrics.csv and metrics.jsonl in a directory, flushing
/// after every row. The CSV header is written only when the file is new or
/// empty, so a resumed run keeps appending to the same files.
class MetricsSink {
 public:
  explicit MetricsSink(const std::filesystem::path& dir);

  /// Rows already present in the files when the sink was opened count here.

  void write(const train::MetricsRow& row);
  std::int64_t rows_written() const { return rows_; }

  const std::filesystem::path& csv_path() const { return csv_path_; }
  const std::filesystem::path& jsonl_path() const { return jsonl_path_; }

 private:
  std::filesystem::path csv_path_;
  std::filesystem::path jsonl_path_;
  std::ofstream csv_;
  std::ofstream jsonl_;
  std::int64_t rows_ = 0;
};

/// Parsed contents of a metrics.csv file; each field kept as text.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Keep only the first `rows` data rows of both files. Used on resume so rows
/// logged after the checkpoint are not duplicated.
void truncate_metrics(const std::filesystem::path& dir, std::int64_t rows);

}  // namespace autoreset::harness
