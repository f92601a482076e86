#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "autoreset/harness/checkpoint.hpp"
#include "autoreset/harness/config_file.hpp"
#include "autoreset/harness/experiment.hpp"
#include "autoreset/harness/metrics_sink.hpp"
#include "autoreset/nn/archive.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace autoreset;
using namespace autoreset::harness;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("autoreset_harness_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tiny_text(std::int64_t steps) {
  return "env = cliff-runner\n"
         "total_steps = " +
         std::to_string(steps) +
         "\n"
         "hidden_dims = 8,8\n"
         "batch_size = 8\n"
         "example_batch = 4\n"
         "segment_batch = 4\n"
         "warmup_steps = 200\n"
         "eval_interval = 500\n"
         "buffer_capacity = 10000\n"
         "lnt_ensemble_size = 3\n"
         "seed = 5\n";
}

train::RunConfig tiny(std::int64_t steps) { return parse_config(tiny_text(steps)); }

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AUTORESET_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ConfigFile, EmptyTextGivesDefaults) {
  EXPECT_EQ(format_config(parse_config("")), format_config(train::RunConfig{}));
  EXPECT_EQ(format_config(parse_config("# only a comment\n\n   \n")), format_config(train::RunConfig{}));
}

TEST(ConfigFile, ParsesValuesAndComments) {
  const auto c = parse_config("env = cliff-runner  # trailing\nhidden_dims = 64, 32\nn_step=5\ntrigger_enabled = false\n");
  EXPECT_EQ(c.env, "cliff-runner");
  EXPECT_EQ(c.hidden_dims, (std::vector<int>{64, 32}));
  EXPECT_EQ(c.n_step, 5);
  EXPECT_FALSE(c.trigger_enabled);
}

TEST(ConfigFile, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("p_thresh = 1.5\n").find("p_thresh"), std::string::npos);
  EXPECT_NE(message("foo = 1\n").find("foo"), std::string::npos);
  EXPECT_NE(message("gamma = 0.9\ngamma = 0.8\n").find("gamma"), std::string::npos);
  EXPECT_NE(message("n_step = two\n").find("n_step"), std::string::npos);
  EXPECT_NE(message("hidden_dims = \n").find("hidden_dims"), std::string::npos);
  EXPECT_NE(message("just words\n").find("line 1"), std::string::npos);
}

TEST(ConfigFile, OverrideAppliesAndValidates) {
  auto c = parse_config("total_steps = 100\n");
  apply_override(c, "total_steps=250");
  EXPECT_EQ(c.total_steps, 250);
  apply_override(c, " p_thresh = 0.3 ");
  EXPECT_EQ(c.p_thresh.value(), 0.3);
  EXPECT_THROW(apply_override(c, "p_thresh=-0.1"), ConfigError);
  EXPECT_THROW(apply_override(c, "bogus=1"), ConfigError);
  EXPECT_THROW(apply_override(c, "no equals sign"), ConfigError);
  EXPECT_EQ(c.reset_actor_objective, "sigmoid");
  apply_override(c, "reset_actor_objective=logit");
  EXPECT_EQ(c.reset_actor_objective, "logit");
  try {
    apply_override(c, "reset_actor_objective=tanh");
    FAIL() << "accepted an unknown objective";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("reset_actor_objective"), std::string::npos);
  }
}

TEST(ConfigFile, FormattedConfigRoundTrips) {
  auto c = parse_config("env = cliff-runner\nbaseline = lnt-sparse\ngamma = 0.95\n");
  const auto text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text)), text);
  // auto thresholds come back resolved
  EXPECT_NE(text.find("q_thresh = 0.1"), std::string::npos);
  const auto resolved = parse_config(text);
  EXPECT_EQ(resolved.resolved_p_thresh(), c.resolved_p_thresh());
  EXPECT_EQ(resolved.resolved_q_thresh(), c.resolved_q_thresh());
}

TEST(MetricsSink, CsvAndJsonlCarryTheSameRows) {
  const auto dir = scratch("sink");
  fs::create_directories(dir);
  train::MetricsRow forward;
  forward.global_step = 12;
  forward.ret = 0.1 + 0.2;
  forward.termination = train::Termination::kTriggered;
  forward.triggered = 1;
  forward.forward_share = 1.0 / 3.0;
  forward.p_bar_at_trigger = 0.05;
  forward.distance_at_trigger = 2.5;
  train::MetricsRow eval;
  eval.global_step = 500;
  eval.kind = train::EpisodeKind::kEval;
  eval.ret = 7.25;
  {
    MetricsSink sink(dir);
    sink.write(forward);
    sink.write(eval);
    EXPECT_EQ(sink.rows_written(), 2);
  }
  const auto table = read_csv(dir / "metrics.csv");
  ASSERT_EQ(table.header, metrics_columns());
  ASSERT_EQ(table.rows.size(), 2u);
  std::ifstream jl(dir / "metrics.jsonl");
  std::string line;
  for (std::size_t r = 0; r < 2; ++r) {
    ASSERT_TRUE(std::getline(jl, line));
    const auto j = nlohmann::json::parse(line);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& field = table.rows[r][c];
      const auto& v = j.at(table.header[c]);
      if (field.empty()) {
        EXPECT_TRUE(v.is_null()) << table.header[c];
      } else if (v.is_number()) {
        EXPECT_EQ(std::stod(field), v.get<double>()) << table.header[c];
      } else {
        EXPECT_EQ(field, v.get<std::string>()) << table.header[c];
      }
    }
  }
  // doubles round-trip exactly
  EXPECT_EQ(std::stod(table.rows[0][table.column("forward_share")]), 1.0 / 3.0);
  EXPECT_EQ(std::stod(table.rows[0][table.column("return")]), 0.1 + 0.2);
  EXPECT_TRUE(table.rows[1][table.column("p_bar_at_trigger")].empty());
  EXPECT_TRUE(table.rows[1][table.column("distance_at_trigger")].empty());
  EXPECT_THROW(table.column("nope"), std::out_of_range);
  fs::remove_all(dir);
}

TEST(MetricsSink, ReopeningAppendsWithoutSecondHeader) {
  const auto dir = scratch("append");
  fs::create_directories(dir);
  train::MetricsRow row;
  {
    MetricsSink sink(dir);
    sink.write(row);
  }
  {
    MetricsSink sink(dir);
    EXPECT_EQ(sink.rows_written(), 1);
    sink.write(row);
  }
  const auto text = slurp(dir / "metrics.csv");
  EXPECT_EQ(text.find(metrics_header()), 0u);
  EXPECT_EQ(text.find(metrics_header(), 1), std::string::npos);
  EXPECT_EQ(read_csv(dir / "metrics.csv").rows.size(), 2u);
  truncate_metrics(dir, 1);
  EXPECT_EQ(read_csv(dir / "metrics.csv").rows.size(), 1u);
  fs::remove_all(dir);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto dir = scratch("ckpt");
  train::Trainer t(tiny(1500));
  t.run();
  save_checkpoint(t, 42, dir / "a");
  auto loaded = load_checkpoint(dir / "a");
  EXPECT_EQ(loaded.metrics_rows, 42);
  EXPECT_EQ(loaded.trainer->global_step(), t.global_step());
  save_checkpoint(*loaded.trainer, 42, dir / "b");
  for (const auto* name : {"manifest.txt", "arrays.bin"}) {
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
  }
  fs::remove_all(dir);
}

TEST(Checkpoint, TruncatedArchiveIsRefused) {
  const auto dir = scratch("trunc");
  train::Trainer t(tiny(600));
  t.run();
  save_checkpoint(t, 0, dir);
  const auto bin = dir / "arrays.bin";
  fs::resize_file(bin, fs::file_size(bin) / 2);
  EXPECT_THROW(load_checkpoint(dir), nn::ArchiveError);
  fs::remove_all(dir);
}

TEST(Experiment, RunIsDeterministicByteForByte) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto sa = run_training(tiny(2000), a);
  const auto sb = run_training(tiny(2000), b);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "metrics.jsonl"), slurp(b / "metrics.jsonl"));
  EXPECT_EQ(summary_json(sa), summary_json(sb));
  EXPECT_EQ(summary_json(read_summary(a / "summary.json")), summary_json(sa));
  EXPECT_EQ(parse_config(slurp(a / "config.txt")).total_steps, 2000);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, ResumeMatchesAnUninterruptedRun) {
  const auto straight = scratch("straight"), split = scratch("split");
  run_training(tiny(3000), straight);
  run_training(tiny(1200), split);
  const auto s = run_training(tiny(3000), split, true);
  EXPECT_EQ(slurp(straight / "metrics.csv"), slurp(split / "metrics.csv"));
  EXPECT_EQ(summary_json(read_summary(straight / "summary.json")), summary_json(s));
  auto other = tiny(3000);
  other.gamma = 0.5;
  EXPECT_THROW(run_training(other, split, true), std::runtime_error);
  fs::remove_all(straight);
  fs::remove_all(split);
}

TEST(Experiment, AggregateAveragesPerModeInOrder) {
  std::vector<RunSummary> runs(3);
  runs[0].mode = "ours";
  runs[0].average_return = 1.0;
  runs[0].manual_resets = 2;
  runs[1].mode = "lnt";
  runs[1].forward_share = 0.5;
  runs[2].mode = "ours";
  runs[2].average_return = 3.0;
  runs[2].manual_resets = 5;
  const auto rows = aggregate(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].mode, "ours");
  EXPECT_EQ(rows[0].runs, 2);
  EXPECT_DOUBLE_EQ(rows[0].average_return, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].manual_resets, 3.5);
  EXPECT_EQ(rows[1].mode, "lnt");
  const auto table = format_comparison(rows);
  for (const auto& col : comparison_columns()) EXPECT_NE(table.find(col), std::string::npos) << col;
}

TEST(Cli, TrainSmokeRun) {
  const auto dir = scratch("cli_train");
  fs::create_directories(dir);
  std::ofstream(dir / "run.txt") << tiny_text(1000);
  EXPECT_EQ(run_cli("train --config " + (dir / "run.txt").string() + " --out " + (dir / "out").string(), dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "checkpoint" / "manifest.txt"));
  EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "out" / "checkpoint").string() + " --episodes 2", dir / "eval"), 0);
  const auto j = nlohmann::json::parse(slurp(dir / "eval"));
  EXPECT_EQ(j.at("returns").size(), 2u);
  fs::remove_all(dir);
}

TEST(Cli, SingleThresholdSweepEqualsPlainTrain) {
  const auto dir = scratch("cli_sweep");
  fs::create_directories(dir);
  const auto cfg = (dir / "run.txt").string();
  std::ofstream(dir / "run.txt") << tiny_text(1000);
  ASSERT_EQ(run_cli("train --config " + cfg + " --set p_thresh=0.2 --out " + (dir / "plain").string(), dir / "l1"), 0);
  ASSERT_EQ(run_cli("sweep --config " + cfg + " --p-thresh 0.2 --seeds 1 --out " + (dir / "sweep").string(),
                    dir / "l2"),
            0)
      << slurp(dir / "l2");
  EXPECT_EQ(slurp(dir / "plain" / "metrics.csv"), slurp(dir / "sweep" / "p_0.2" / "seed_5" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep" / "sweep.csv"));
  fs::remove_all(dir);
}

TEST(Cli, CompareWritesTheTable) {
  const auto dir = scratch("cli_compare");
  fs::create_directories(dir);
  std::ofstream(dir / "run.txt") << tiny_text(800);
  ASSERT_EQ(run_cli("compare --config " + (dir / "run.txt").string() + " --modes ours,lnt --seeds 1 --jobs 2 --out " +
                        (dir / "cmp").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  const auto table = slurp(dir / "cmp" / "summary.csv");
  for (const auto& col : comparison_columns()) EXPECT_NE(table.find(col), std::string::npos) << col;
  EXPECT_NE(table.find("ours"), std::string::npos);
  EXPECT_NE(table.find("lnt"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitWithOne) {
  const auto dir = scratch("cli_usage");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.txt") << "p_thresh = 1.5\n";
  const auto out = (dir / "o").string();
  EXPECT_EQ(run_cli("", dir / "log"), 1);
  EXPECT_EQ(run_cli("train --out " + out, dir / "log"), 1);
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.txt").string() + " --out " + out, dir / "log"), 1);
  EXPECT_NE(slurp(dir / "log").find("p_thresh"), std::string::npos);
  EXPECT_EQ(run_cli("train --config " + (dir / "missing.txt").string() + " --out " + out, dir / "log"), 1);
  EXPECT_EQ(run_cli("train --resume --out " + out, dir / "log"), 1);
  EXPECT_EQ(run_cli("compare --config " + (dir / "bad.txt").string() + " --modes nope --out " + out, dir / "log"), 1);
  EXPECT_EQ(run_cli("eval --checkpoint " + (dir / "nowhere").string(), dir / "log"), 1);
  fs::remove_all(dir);
}
