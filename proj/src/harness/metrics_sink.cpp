#include "autoreset/harness/metrics_sink.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace autoreset::harness {

namespace {

std::string fmt(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("cannot rewrite " + path.string());
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "global_step",  "episode_index",  "kind",          "return",
      "termination",  "manual_resets",  "triggered",     "requested",
      "forward_share", "success_rate",  "p_bar_at_trigger", "distance_at_trigger"};
  return cols;
}

std::string metrics_header() {
  std::string out;
  for (const auto& c : metrics_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string format_csv_row(const train::MetricsRow& row) {
  std::string out;
  out += std::to_string(row.global_step) + ',';
  out += std::to_string(row.episode_index) + ',';
  out += train::to_string(row.kind) + ',';
  out += fmt(row.ret) + ',';
  out += train::to_string(row.termination) + ',';
  out += std::to_string(row.manual_resets) + ',';
  out += std::to_string(row.triggered) + ',';
  out += std::to_string(row.requested) + ',';
  out += fmt(row.forward_share) + ',';
  out += fmt(row.success_rate) + ',';
  if (row.p_bar_at_trigger) out += fmt(*row.p_bar_at_trigger);
  out += ',';
  if (row.distance_at_trigger) out += fmt(*row.distance_at_trigger);
  return out;
}

std::string format_json_row(const train::MetricsRow& row) {
  nlohmann::ordered_json j;
  j["global_step"] = row.global_step;
  j["episode_index"] = row.episode_index;
  j["kind"] = train::to_string(row.kind);
  j["return"] = row.ret;
  j["termination"] = train::to_string(row.termination);
  j["manual_resets"] = row.manual_resets;
  j["triggered"] = row.triggered;
  j["requested"] = row.requested;
  j["forward_share"] = row.forward_share;
  j["success_rate"] = row.success_rate;
  j["p_bar_at_trigger"] = row.p_bar_at_trigger ? nlohmann::ordered_json(*row.p_bar_at_trigger) : nullptr;
  j["distance_at_trigger"] = row.distance_at_trigger ? nlohmann::ordered_json(*row.distance_at_trigger) : nullptr;
  return j.dump();
}

MetricsSink::MetricsSink(const std::filesystem::path& dir)
    : csv_path_(dir / "metrics.csv"), jsonl_path_(dir / "metrics.jsonl") {
  std::filesystem::create_directories(dir);
  const auto existing = read_lines(csv_path_);
  const bool fresh = existing.empty();
  if (!fresh && existing.front() != metrics_header()) {
    throw std::runtime_error(csv_path_.string() + " exists with a different header");
  }
  rows_ = fresh ? 0 : static_cast<std::int64_t>(existing.size()) - 1;
  csv_.open(csv_path_, std::ios::app);
  jsonl_.open(jsonl_path_, std::ios::app);
  if (!csv_ || !jsonl_) throw std::runtime_error("cannot open metrics files in " + dir.string());
  if (fresh) {
    csv_ << metrics_header() << '\n';
    csv_.flush();
  }
}

void MetricsSink::write(const train::MetricsRow& row) {
  csv_ << format_csv_row(row) << '\n';
  jsonl_ << format_json_row(row) << '\n';
  csv_.flush();
  jsonl_.flush();
  if (!csv_ || !jsonl_) throw std::runtime_error("write to metrics files failed (" + csv_path_.string() + ")");
  ++rows_;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty or missing CSV " + path.string());
  CsvTable table;
  table.header = split(lines.front(), ',');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split(lines[i], ',');
    if (fields.size() != table.header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(i) + " has the wrong number of fields");
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

void truncate_metrics(const std::filesystem::path& dir, std::int64_t rows) {
  const auto csv = dir / "metrics.csv";
  const auto jsonl = dir / "metrics.jsonl";
  auto csv_lines = read_lines(csv);
  auto json_lines = read_lines(jsonl);
  const auto n = static_cast<std::size_t>(rows);
  if (csv_lines.size() < n + 1 || json_lines.size() < n) {
    throw std::runtime_error("metrics files in " + dir.string() + " hold fewer rows than the checkpoint recorded");
  }
  csv_lines.resize(n + 1);
  json_lines.resize(n);
  write_lines(csv, csv_lines);
  write_lines(jsonl, json_lines);
}

}  // namespace autoreset::harness
