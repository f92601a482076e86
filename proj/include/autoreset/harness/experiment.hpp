#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "autoreset/train/metrics.hpp"
#include "autoreset/train/run_config.hpp"

namespace autoreset::harness {

/// Per-run totals in the shape of the comparison table.
struct RunSummary {
  std::string mode;
  std::uint64_t seed = 0;
  std::int64_t global_step = 0;
  /// Mean noise-free eval return over the whole run (0 without evals).
  double average_return = 0.0;
  std::int64_t manual_resets = 0;
  double forward_share = 0.0;
  double success_rate = 0.0;
  std::int64_t triggered = 0;
  std::int64_t requested = 0;
  std::int64_t irrecoverable_entries = 0;
};

RunSummary summarize(const train::RunConfig& config, const train::RunMetrics& metrics, std::int64_t global_step);
std::string summary_json(const RunSummary& s);
RunSummary read_summary(const std::filesystem::path& path);

/// Output layout of one run directory.
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config() const { return dir / "config.txt"; }
  std::filesystem::path checkpoint() const { return dir / "checkpoint"; }
  std::filesystem::path summary() const { return dir / "summary.json"; }
};

/// Train one run into `out_dir`: config echo, metrics.csv/.jsonl, periodic
/// and final checkpoints, summary.json. Accounting identities are checked
/// after every logged row; a violation throws std::logic_error.
/// With `resume`, continues from `out_dir`/checkpoint; `config` must then
/// match the checkpoint's config except for total_steps.
RunSummary run_training(const train::RunConfig& config, const std::filesystem::path& out_dir, bool resume = false);

/// Column names of the comparison table.
const std::vector<std::string>& comparison_columns();

struct ComparisonRow {
  std::string mode;
  int runs = 0;
  double average_return = 0.0;
  double manual_resets = 0.0;
  double forward_share = 0.0;
  double success_rate = 0.0;
};

/// Seed-averaged rows, one per distinct mode in input order.
std::vector<ComparisonRow> aggregate(const std::vector<RunSummary>& runs);
std::string format_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace autoreset::harness
