#pragma once

#include <functional>
#include <memory>

#include "autoreset/agents/forward_agent.hpp"
#include "autoreset/agents/replay_buffer.hpp"
#include "autoreset/agents/reset_learner.hpp"
#include "autoreset/envs/environment.hpp"
#include "autoreset/nn/archive.hpp"
#include "autoreset/train/metrics.hpp"
#include "autoreset/train/run_config.hpp"
#include "autoreset/util/random.hpp"

namespace autoreset::train {

/// Joint forward/reset training loop: alternating forward and reset
/// episodes with reset triggering, manual-reset accounting and periodic
/// noise-free evaluation.
class Trainer {
 public:
  using RowSink = std::function<void(const MetricsRow&)>;

  explicit Trainer(RunConfig config);

  void set_row_sink(RowSink sink) { sink_ = std::move(sink); }

  /// Alternate episode pairs until total_steps env steps have been taken.
  const RunMetrics& run();

  /// One forward episode, its reset episode and any due evaluations.
  /// Returns false (doing nothing) once total_steps is reached.
  bool run_episode_pair();
  bool finished() const { return global_step_ >= config_.total_steps; }

  EpisodeOutcome run_forward_episode();
  EpisodeOutcome run_reset_episode();

  /// Noise-free forward + reset episode pair on a private copy of the
  /// environment; returns the forward return. Touches no learner state.
  double evaluate_snapshot(Rng& eval_rng) const;

  const RunConfig& config() const { return config_; }
  /// Extend or shorten the run, e.g. when resuming from a checkpoint.
  void set_total_steps(std::int64_t total) { config_.total_steps = total; }
  const RunMetrics& metrics() const { return metrics_; }
  std::int64_t global_step() const { return global_step_; }
  const envs::Environment& environment() const { return *env_; }
  const envs::EnvState& state() const { return state_; }
  void set_state(const envs::EnvState& s) { state_ = s; }
  agents::ForwardAgent& forward_agent() { return forward_; }
  const agents::ForwardAgent& forward_agent() const { return forward_; }
  agents::ResetLearner& reset_learner() { return *reset_; }
  const agents::ResetLearner& reset_learner() const { return *reset_; }
  const agents::ReplayBuffer& forward_buffer() const { return forward_buffer_; }

  /// Complete resumable state (valid between episode pairs).
  void save(nn::ArchiveWriter& out) const;
  void load(const nn::ArchiveReader& in);

 private:
  bool in_warmup() const { return global_step_ < config_.warmup_steps; }
  Eigen::VectorXd random_action();
  void emit(const EpisodeOutcome& outcome, const std::optional<TriggerEvent>& trigger);
  void run_due_evaluations();
  std::pair<EpisodeOutcome, EpisodeOutcome> evaluation_pair(Rng& eval_rng) const;

  RunConfig config_;
  std::unique_ptr<envs::Environment> env_;
  agents::ForwardAgent forward_;
  std::unique_ptr<agents::ResetLearner> reset_;
  agents::ReplayBuffer forward_buffer_;
  Rng rng_;
  envs::EnvState state_;
  RunMetrics metrics_;
  std::int64_t global_step_ = 0;
  std::int64_t episode_index_ = 0;
  std::int64_t next_eval_ = 0;
  std::int64_t eval_count_ = 0;
  std::uint64_t eval_seed_ = 0;
  RowSink sink_;
};

/// Build the reset learner selected by config.baseline.
std::unique_ptr<agents::ResetLearner> make_reset_learner(const RunConfig& config, int state_dim, int action_dim,
                                                         std::uint64_t seed);

}  // namespace autoreset::train
