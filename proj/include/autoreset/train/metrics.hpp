#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace autoreset::train {

enum class EpisodeKind { kForward, kReset, kEval };
enum class Termination { kTriggered, kRequested, kResetSuccess, kManualReset };

std::string to_string(EpisodeKind kind);
std::string to_string(Termination t);

struct EpisodeOutcome {
  EpisodeKind kind = EpisodeKind::kForward;
  int steps = 0;
  double ret = 0.0;
  Termination termination = Termination::kRequested;
  bool entered_irrecoverable = false;
};

struct EpisodeRecord {
  EpisodeOutcome outcome;
  std::int64_t global_step = 0;  // after the episode
};

struct TriggerEvent {
  std::int64_t global_step = 0;
  Eigen::VectorXd observation;
  double distance_to_initial = 0.0;
  double p_bar = 0.0;
};

struct EvalRecord {
  std::int64_t global_step = 0;
  double forward_return = 0.0;
};

/// Cumulative counters and per-event logs of one run.
struct RunMetrics {
  std::int64_t manual_resets = 0;
  std::int64_t triggered_resets = 0;
  std::int64_t requested_resets = 0;
  std::int64_t reset_attempts = 0;
  std::int64_t reset_successes = 0;
  std::int64_t forward_steps = 0;
  std::int64_t reset_steps = 0;
  std::int64_t forward_episodes = 0;
  std::int64_t irrecoverable_entries = 0;

  std::vector<EvalRecord> evals;
  std::vector<TriggerEvent> triggers;
  std::vector<EpisodeRecord> episodes;

  std::int64_t total_steps() const { return forward_steps + reset_steps; }
  /// forward_steps / (forward_steps + reset_steps); 0 before any step.
  double forward_share() const;
  /// reset_successes / reset_attempts; 0 before any attempt.
  double success_rate() const;

  /// Throws std::logic_error naming the first violated accounting identity.
  /// `pending_reset` is true between a forward episode and its reset episode.
  void check_accounting(bool pending_reset = false) const;
};

/// One row of the per-episode metrics log (column order is the CSV order).
struct MetricsRow {
  std::int64_t global_step = 0;
  std::int64_t episode_index = 0;
  EpisodeKind kind = EpisodeKind::kForward;
  double ret = 0.0;
  Termination termination = Termination::kRequested;
  std::int64_t manual_resets = 0;
  std::int64_t triggered = 0;
  std::int64_t requested = 0;
  double forward_share = 0.0;
  double success_rate = 0.0;
  std::optional<double> p_bar_at_trigger;
  std::optional<double> distance_at_trigger;
};

/// (training step, distance to the initial state) at every reset trigger.
std::vector<std::pair<std::int64_t, double>> curriculum_stat(const RunMetrics& metrics);

}  // namespace autoreset::train
