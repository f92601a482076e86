#include "autoreset/harness/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "autoreset/harness/checkpoint.hpp"
#include "autoreset/harness/config_file.hpp"
#include "autoreset/harness/metrics_sink.hpp"
#include "autoreset/train/trainer.hpp"
#include "json.hpp"

namespace autoreset::harness {

namespace {

std::string mode_name(train::BaselineMode mode) {
  return mode == train::BaselineMode::kNone ? "ours" : train::to_string(mode);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

RunSummary summarize(const train::RunConfig& config, const train::RunMetrics& m, std::int64_t global_step) {
  RunSummary s;
  s.mode = mode_name(config.baseline);
  s.seed = config.seed;
  s.global_step = global_step;
  if (!m.evals.empty()) {
    double sum = 0.0;
    for (const auto& e : m.evals) sum += e.forward_return;
    s.average_return = sum / static_cast<double>(m.evals.size());
  }
  s.manual_resets = m.manual_resets;
  s.forward_share = m.forward_share();
  s.success_rate = m.success_rate();
  s.triggered = m.triggered_resets;
  s.requested = m.requested_resets;
  s.irrecoverable_entries = m.irrecoverable_entries;
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["mode"] = s.mode;
  j["seed"] = s.seed;
  j["global_step"] = s.global_step;
  j["average_return"] = s.average_return;
  j["manual_resets"] = s.manual_resets;
  j["forward_share"] = s.forward_share;
  j["success_rate"] = s.success_rate;
  j["triggered"] = s.triggered;
  j["requested"] = s.requested;
  j["irrecoverable_entries"] = s.irrecoverable_entries;
  return j.dump(2) + "\n";
}

RunSummary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    RunSummary s;
    s.mode = j.at("mode").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.global_step = j.at("global_step").get<std::int64_t>();
    s.average_return = j.at("average_return").get<double>();
    s.manual_resets = j.at("manual_resets").get<std::int64_t>();
    s.forward_share = j.at("forward_share").get<double>();
    s.success_rate = j.at("success_rate").get<double>();
    s.triggered = j.at("triggered").get<std::int64_t>();
    s.requested = j.at("requested").get<std::int64_t>();
    s.irrecoverable_entries = j.at("irrecoverable_entries").get<std::int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

RunSummary run_training(const train::RunConfig& config, const std::filesystem::path& out_dir, bool resume) {
  const RunPaths paths{out_dir};
  std::filesystem::create_directories(out_dir);

  std::unique_ptr<train::Trainer> trainer;
  if (resume) {
    auto loaded = load_checkpoint(paths.checkpoint());
    trainer = std::move(loaded.trainer);
    auto wanted = config;
    wanted.total_steps = trainer->config().total_steps;
    const auto have = config_entries(trainer->config());
    const auto want = config_entries(wanted);
    for (std::size_t i = 0; i < have.size(); ++i) {
      if (have[i].second != want[i].second) {
        throw std::runtime_error("resume: config key '" + have[i].first + "' differs from the checkpoint (" +
                                 have[i].second + " vs " + want[i].second + ")");
      }
    }
    trainer->set_total_steps(config.total_steps);
    truncate_metrics(out_dir, loaded.metrics_rows);
  } else {
    config.validate();
    std::filesystem::remove(out_dir / "metrics.csv");
    std::filesystem::remove(out_dir / "metrics.jsonl");
    std::filesystem::remove_all(paths.checkpoint());
    trainer = std::make_unique<train::Trainer>(config);
  }
  const auto& cfg = trainer->config();
  write_text(paths.config(), format_config(cfg));

  MetricsSink sink(out_dir);
  const train::Trainer* t = trainer.get();
  trainer->set_row_sink([&sink, t](const train::MetricsRow& row) {
    sink.write(row);
    t->metrics().check_accounting(row.kind == train::EpisodeKind::kForward);
  });

  std::int64_t next_checkpoint = 0;
  if (cfg.checkpoint_interval > 0) {
    next_checkpoint = (trainer->global_step() / cfg.checkpoint_interval + 1) * cfg.checkpoint_interval;
  }
  while (trainer->run_episode_pair()) {
    if (cfg.checkpoint_interval > 0 && trainer->global_step() >= next_checkpoint) {
      save_checkpoint(*trainer, sink.rows_written(), paths.checkpoint());
      while (next_checkpoint <= trainer->global_step()) next_checkpoint += cfg.checkpoint_interval;
    }
  }
  trainer->metrics().check_accounting(false);
  save_checkpoint(*trainer, sink.rows_written(), paths.checkpoint());

  const auto summary = summarize(cfg, trainer->metrics(), trainer->global_step());
  write_text(paths.summary(), summary_json(summary));
  return summary;
}

const std::vector<std::string>& comparison_columns() {
  static const std::vector<std::string> cols{"mode", "runs", "average return", "manual resets", "forward share",
                                             "success rate"};
  return cols;
}

std::vector<ComparisonRow> aggregate(const std::vector<RunSummary>& runs) {
  std::vector<ComparisonRow> rows;
  std::map<std::string, std::size_t> index;
  for (const auto& r : runs) {
    auto [it, inserted] = index.emplace(r.mode, rows.size());
    if (inserted) rows.push_back(ComparisonRow{r.mode});
    auto& row = rows[it->second];
    row.runs += 1;
    row.average_return += r.average_return;
    row.manual_resets += static_cast<double>(r.manual_resets);
    row.forward_share += r.forward_share;
    row.success_rate += r.success_rate;
  }
  for (auto& row : rows) {
    const double n = row.runs;
    row.average_return /= n;
    row.manual_resets /= n;
    row.forward_share /= n;
    row.success_rate /= n;
  }
  return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  const auto& cols = comparison_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.6g,%.6g,%.6g,%.6g\n", r.mode.c_str(), r.runs, r.average_return,
                  r.manual_resets, r.forward_share, r.success_rate);
    out << buf;
  }
  return out.str();
}

}  // namespace autoreset::harness
