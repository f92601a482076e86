#pragma once

#include <cstdint>
#include <vector>

#include "autoreset/agents/replay_buffer.hpp"
#include "autoreset/nn/archive.hpp"
#include "autoreset/nn/mlp.hpp"
#include "autoreset/util/random.hpp"

namespace autoreset::agents {

/// Outcome of one gradient step. `applied` is false when the step was
/// skipped because the loss or a gradient was non-finite.
struct UpdateResult {
  double value = 0.0;
  bool applied = true;
};

/// Add i.i.d. Gaussian noise and clip every component to [-1, 1].
Vector explore_action(const Vector& action, double sigma, Rng& rng);

struct DdpgConfig {
  std::vector<int> hidden{400, 300};
  double gamma = 0.99;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double noise_sigma = 0.1;
};

/// Deterministic-policy actor-critic task learner (MSE TD critic).
class ForwardAgent {
 public:
  ForwardAgent(int state_dim, int action_dim, const DdpgConfig& config, std::uint64_t seed);

  Vector select_action(const Vector& state, bool explore, Rng& rng) const;

  /// y = r + gamma * (1 - terminal) * Q'(s', pi'(s')), one ADAM step on the
  /// mean squared TD error, then Polyak update of both targets.
  UpdateResult critic_update(const TransitionBatch& batch);

  /// Ascend mean Q(s, pi(s)) through the critic's action gradient.
  UpdateResult actor_update(const TransitionBatch& batch);

  /// TD targets for a batch computed from the target networks only.
  Vector td_targets(const TransitionBatch& batch) const;

  const nn::MlpParams& actor() const { return actor_; }
  const nn::MlpParams& critic() const { return critic_; }
  const nn::MlpParams& actor_target() const { return actor_target_; }
  const nn::MlpParams& critic_target() const { return critic_target_; }
  nn::MlpParams& mutable_actor() { return actor_; }
  nn::MlpParams& mutable_critic() { return critic_; }
  nn::MlpParams& mutable_actor_target() { return actor_target_; }
  nn::MlpParams& mutable_critic_target() { return critic_target_; }

  const DdpgConfig& config() const { return config_; }
  DdpgConfig& mutable_config() { return config_; }

  void save(nn::ArchiveWriter& out, const std::string& prefix) const;
  void load(const nn::ArchiveReader& in, const std::string& prefix);

 private:
  DdpgConfig config_;
  nn::MlpParams actor_;
  nn::MlpParams actor_target_;
  nn::MlpParams critic_;
  nn::MlpParams critic_target_;
  nn::AdamState actor_adam_;
  nn::AdamState critic_adam_;
};

}  // namespace autoreset::agents
