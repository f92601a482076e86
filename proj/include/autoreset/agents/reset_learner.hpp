#pragma once

#include <string>

#include "autoreset/envs/environment.hpp"
#include "autoreset/nn/archive.hpp"
#include "autoreset/util/random.hpp"

namespace autoreset::agents {

using Vector = Eigen::VectorXd;

struct TriggerDecision {
  bool trigger = false;
  /// The quantity compared to the threshold: mean success probability for the
  /// example-based agent, ensemble-minimum Q for the LNT baselines.
  double score = 0.0;
};

/// What the training loop needs from a reset agent. The example-based agent
/// and the LNT baselines both implement it, so they share one loop.
class ResetLearner {
 public:
  virtual ~ResetLearner() = default;

  virtual Vector act(const Vector& state, bool explore, Rng& rng) const = 0;
  virtual TriggerDecision evaluate_trigger(const Vector& state, const Vector& action) const = 0;

  /// Called with the observation at the start of every forward episode.
  virtual void add_initial_example(const envs::EnvState& state, const envs::Environment& env) = 0;

  virtual void begin_episode() = 0;
  virtual void record_step(const envs::EnvState& state, const Vector& action, const envs::StepResult& result,
                           const envs::Environment& env) = 0;
  virtual void end_episode() = 0;

  /// One round of learner updates (classifier/critic then actor).
  virtual void update(Rng& rng) = 0;

  virtual void save(nn::ArchiveWriter& out, const std::string& prefix) const = 0;
  virtual void load(const nn::ArchiveReader& in, const std::string& prefix) = 0;
};

}  // namespace autoreset::agents
