#include "autoreset/train/metrics.hpp"

#include <stdexcept>


namespace autoreset::train {

std::string to_string(EpisodeKind kind) {
  switch (kind) {
    case EpisodeKind::kForward:
      return "forward";
    case EpisodeKind::kReset:
      return "reset";
    case EpisodeKind::kEval:
      return "eval";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kTriggered:
      return "triggered";
    case Termination::kRequested:
      return "requested";
    case Termination::kResetSuccess:
      return "reset_success";
    case Termination::kManualReset:
      return "manual_reset";
  }
  return "?";
}

double RunMetrics::forward_share() const {
  const auto total = total_steps();
  return total == 0 ? 0.0 : static_cast<double>(forward_steps) / static_cast<double>(total);
}

double RunMetrics::success_rate() const {
  return reset_attempts == 0 ? 0.0 : static_cast<double>(reset_successes) / static_cast<double>(reset_attempts);
}

void RunMetrics::check_accounting(bool pending_reset) const {
  if (reset_attempts != reset_successes + manual_resets) {
    throw std::logic_error("accounting: reset_attempts (" + std::to_string(reset_attempts) +
                           ") != reset_successes + manual_resets (" +
                           std::to_string(reset_successes + manual_resets) + ")");
  }
  if (triggered_resets + requested_resets != reset_attempts + (pending_reset ? 1 : 0)) {
    throw std::logic_error("accounting: triggered + requested (" + std::to_string(triggered_resets + requested_resets) +
                           ") does not match reset attempts (" + std::to_string(reset_attempts) + ")");
  }
  if (forward_episodes != triggered_resets + requested_resets) {
    throw std::logic_error("accounting: forward episodes do not match reset requests");
  }
  if (static_cast<std::int64_t>(triggers.size()) != triggered_resets) {
    throw std::logic_error("accounting: trigger log length differs from triggered_resets");
  }
  const double share = forward_share();
  if (share < 0.0 || share > 1.0) throw std::logic_error("accounting: forward share outside [0, 1]");
}

std::vector<std::pair<std::int64_t, double>> curriculum_stat(const RunMetrics& metrics) {
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(metrics.triggers.size());
  for (const auto& t : metrics.triggers) out.emplace_back(t.global_step, t.distance_to_initial);
  return out;
}

}  // namespace autoreset::train
