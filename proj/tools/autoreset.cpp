// Command line front end: train, eval, sweep and compare.
//
// Exit status: 0 ok, 1 usage or input error, 2 runtime failure.

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autoreset/harness/checkpoint.hpp"
#include "autoreset/harness/config_file.hpp"
#include "autoreset/harness/experiment.hpp"
#include "autoreset/nn/archive.hpp"
#include "json.hpp"

extern char** environ;

namespace fs = std::filesystem;
using autoreset::harness::ConfigError;
using autoreset::train::RunConfig;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig config_from(const std::string& path, const std::vector<std::string>& overrides) {
  if (!path.empty() && !fs::exists(path)) throw UsageError("config file not found: " + path);
  auto config = path.empty() ? RunConfig{} : autoreset::harness::load_config(path);
  for (const auto& o : overrides) autoreset::harness::apply_override(config, o);
  return config;
}

bool overrides_key(const std::vector<std::string>& overrides, const std::string& key) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    auto k = o.substr(0, eq);
    k.erase(0, k.find_first_not_of(" \t"));
    k.erase(k.find_last_not_of(" \t") + 1);
    if (k == key) return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string self_exe() {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  if (ec) throw std::runtime_error("cannot locate own executable");
  return p.string();
}

struct ChildRun {
  std::vector<std::string> args;
  fs::path out;
};

/// Runs each child as a separate process, at most `jobs` at a time.
/// Child stdout/stderr go to <out>/log.txt. Returns the number of failures.
int run_children(const std::vector<ChildRun>& runs, int jobs) {
  const auto exe = self_exe();
  std::size_t next = 0;
  int active = 0;
  int failures = 0;
  std::vector<std::pair<pid_t, std::size_t>> running;
  while (next < runs.size() || active > 0) {
    while (active < jobs && next < runs.size()) {
      const auto& run = runs[next];
      fs::create_directories(run.out);
      const auto log = (run.out / "log.txt").string();
      posix_spawn_file_actions_t actions;
      posix_spawn_file_actions_init(&actions);
      posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
      std::vector<std::string> argv_store{exe};
      argv_store.insert(argv_store.end(), run.args.begin(), run.args.end());
      std::vector<char*> argv;
      for (auto& a : argv_store) argv.push_back(a.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      const int rc = posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv.data(), environ);
      posix_spawn_file_actions_destroy(&actions);
      if (rc != 0) throw std::runtime_error(std::string("posix_spawn failed: ") + std::strerror(rc));
      running.emplace_back(pid, next);
      ++active;
      ++next;
    }
    int status = 0;
    const pid_t done = waitpid(-1, &status, 0);
    if (done < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("waitpid failed");
    }
    for (auto it = running.begin(); it != running.end(); ++it) {
      if (it->first != done) continue;
      const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
      if (!ok) {
        ++failures;
        std::cerr << "run in " << runs[it->second].out << " failed; see log.txt there\n";
      } else {
        std::cout << "finished " << runs[it->second].out.string() << "\n";
      }
      running.erase(it);
      --active;
      break;
    }
  }
  return failures;
}

std::vector<std::string> base_args(const std::string& config_path, const std::vector<std::string>& overrides) {
  std::vector<std::string> args{"train"};
  if (!config_path.empty()) {
    args.push_back("--config");
    args.push_back(fs::absolute(config_path).string());
  }
  for (const auto& o : overrides) {
    args.push_back("--set");
    args.push_back(o);
  }
  return args;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::optional<std::uint64_t>& seed, const std::string& out, bool resume) {
  std::string path = config_path;
  if (resume && path.empty()) path = (fs::path(out) / "config.txt").string();
  if (!resume && path.empty()) throw UsageError("train needs --config (or --resume)");
  if (resume && !fs::exists(fs::path(out) / "checkpoint")) throw UsageError("nothing to resume in " + out);
  auto config = config_from(path, overrides);
  if (seed) config.seed = *seed;
  const auto summary = autoreset::harness::run_training(config, out, resume);
  std::cout << autoreset::harness::summary_json(summary);
  return kOk;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t eval_seed) {
  if (!fs::exists(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint);
  if (episodes < 1) throw UsageError("--episodes must be >= 1");
  auto loaded = autoreset::harness::load_checkpoint(checkpoint);
  nlohmann::ordered_json j;
  j["checkpoint"] = checkpoint;
  j["global_step"] = loaded.trainer->global_step();
  std::vector<double> returns;
  double sum = 0.0;
  for (int i = 0; i < episodes; ++i) {
    autoreset::Rng rng(eval_seed + static_cast<std::uint64_t>(i));
    returns.push_back(loaded.trainer->evaluate_snapshot(rng));
    sum += returns.back();
  }
  j["episodes"] = episodes;
  j["mean_return"] = sum / episodes;
  j["returns"] = returns;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

std::string point_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p_%g", p);
  return buf;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& thresholds, int seeds, const std::string& out, int jobs) {
  if (overrides_key(overrides, "p_thresh")) throw UsageError("--p-thresh conflicts with --set p_thresh");
  if (overrides_key(overrides, "seed")) throw UsageError("--seeds conflicts with --set seed");
  const auto base = config_from(config_path, overrides);
  std::vector<double> points;
  for (const auto& t : split_list(thresholds)) {
    RunConfig probe = base;
    autoreset::harness::apply_override(probe, "p_thresh=" + t);
    points.push_back(probe.resolved_p_thresh());
  }
  if (points.empty()) throw UsageError("--p-thresh needs at least one value");
  if (seeds < 1) throw UsageError("--seeds must be >= 1");

  std::vector<ChildRun> runs;
  for (double p : points) {
    for (int s = 0; s < seeds; ++s) {
      const auto seed = base.seed + static_cast<std::uint64_t>(s);
      ChildRun run;
      run.out = fs::path(out) / point_label(p) / ("seed_" + std::to_string(seed));
      run.args = base_args(config_path, overrides);
      char buf[64];
      std::snprintf(buf, sizeof buf, "p_thresh=%.17g", p);
      run.args.insert(run.args.end(), {"--set", buf, "--seed", std::to_string(seed), "--out", run.out.string()});
      runs.push_back(run);
    }
  }
  if (run_children(runs, jobs) != 0) return kRuntime;

  std::ostringstream table;
  table << "p_thresh,runs,average return,manual resets,forward share,success rate\n";
  for (double p : points) {
    std::vector<autoreset::harness::RunSummary> summaries;
    for (int s = 0; s < seeds; ++s) {
      const auto seed = base.seed + static_cast<std::uint64_t>(s);
      summaries.push_back(autoreset::harness::read_summary(fs::path(out) / point_label(p) /
                                                           ("seed_" + std::to_string(seed)) / "summary.json"));
    }
    const auto row = autoreset::harness::aggregate(summaries).front();
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.6g,%.6g,%.6g,%.6g\n", p, row.runs, row.average_return,
                  row.manual_resets, row.forward_share, row.success_rate);
    table << buf;
  }
  std::ofstream(fs::path(out) / "sweep.csv") << table.str();
  std::cout << table.str();
  return kOk;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& modes,
                int seeds, const std::string& out, int jobs) {
  if (overrides_key(overrides, "baseline")) throw UsageError("--modes conflicts with --set baseline");
  if (overrides_key(overrides, "seed")) throw UsageError("--seeds conflicts with --set seed");
  const auto base = config_from(config_path, overrides);
  const auto mode_list = split_list(modes);
  if (mode_list.empty()) throw UsageError("--modes needs at least one mode");
  for (const auto& m : mode_list) {
    try {
      autoreset::train::baseline_from_string(m);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (seeds < 1) throw UsageError("--seeds must be >= 1");

  std::vector<ChildRun> runs;
  for (const auto& m : mode_list) {
    for (int s = 0; s < seeds; ++s) {
      const auto seed = base.seed + static_cast<std::uint64_t>(s);
      ChildRun run;
      run.out = fs::path(out) / m / ("seed_" + std::to_string(seed));
      run.args = base_args(config_path, overrides);
      run.args.insert(run.args.end(),
                      {"--set", "baseline=" + m, "--seed", std::to_string(seed), "--out", run.out.string()});
      runs.push_back(run);
    }
  }
  if (run_children(runs, jobs) != 0) return kRuntime;

  std::vector<autoreset::harness::RunSummary> summaries;
  for (const auto& m : mode_list) {
    for (int s = 0; s < seeds; ++s) {
      const auto seed = base.seed + static_cast<std::uint64_t>(s);
      auto summary =
          autoreset::harness::read_summary(fs::path(out) / m / ("seed_" + std::to_string(seed)) / "summary.json");
      summary.mode = m;
      summaries.push_back(summary);
    }
  }
  const auto table = autoreset::harness::format_comparison(autoreset::harness::aggregate(summaries));
  std::ofstream(fs::path(out) / "summary.csv") << table;
  std::cout << table;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint forward/reset agent training"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  int jobs = 1;
  int seeds = 1;

  auto* train = app.add_subcommand("train", "Train one run");
  std::optional<std::uint64_t> seed;
  bool resume = false;
  train->add_option("--config", config_path, "Config file (key = value lines)");
  train->add_option("--set", overrides, "Override one key, e.g. --set total_steps=5000");
  train->add_option("--seed", seed, "Random seed (overrides the config)");
  train->add_option("--out", out, "Output directory")->required();
  train->add_flag("--resume", resume, "Continue from OUT/checkpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint without exploration noise");
  std::string checkpoint;
  int episodes = 1;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--episodes", episodes, "Number of evaluation episode pairs");
  eval->add_option("--eval-seed", eval_seed, "Seed of the first evaluation episode");

  auto* sweep = app.add_subcommand("sweep", "Train across reset-trigger thresholds");
  std::string thresholds;
  sweep->add_option("--config", config_path, "Config file")->required();
  sweep->add_option("--set", overrides, "Override one key");
  sweep->add_option("--p-thresh", thresholds, "Comma separated thresholds")->required();
  sweep->add_option("--seeds", seeds, "Seeds per threshold");
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Train each reset mode and tabulate");
  std::string modes = "ours,lnt,lnt-sparse";
  compare->add_option("--config", config_path, "Config file")->required();
  compare->add_option("--set", overrides, "Override one key");
  compare->add_option("--modes", modes, "Comma separated: ours, lnt, lnt-sparse");
  compare->add_option("--seeds", seeds, "Seeds per mode");
  compare->add_option("--out", out, "Output directory")->required();
  compare->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, seed, out, resume);
    if (*eval) return cmd_eval(checkpoint, episodes, eval_seed);
    if (*sweep) return cmd_sweep(config_path, overrides, thresholds, seeds, out, jobs);
    if (*compare) return cmd_compare(config_path, overrides, modes, seeds, out, jobs);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
