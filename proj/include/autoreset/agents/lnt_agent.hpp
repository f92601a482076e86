#pragma once

#include <cstdint>
#include <vector>

#include "autoreset/agents/forward_agent.hpp"
#include "autoreset/agents/replay_buffer.hpp"
#include "autoreset/agents/reset_learner.hpp"

namespace autoreset::agents {

struct LntConfig {
  std::vector<int> hidden{400, 300};
  int ensemble_size = 20;
  double gamma = 0.99;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double noise_sigma = 0.1;
  envs::ResetRewardMode mode = envs::ResetRewardMode::kShaped;
  double q_thresh = 20.0;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 500'000;
};

/// Trigger threshold used with each reset-reward mode (20 shaped, 0.1 sparse).
double default_q_thresh(envs::ResetRewardMode mode);

/// Leave-no-trace style reset agent: an ensemble of reset Q-functions trained
/// on an environment-provided reset reward, triggering on the ensemble minimum.
class LntResetAgent final : public ResetLearner {
 public:
  struct Member {
    nn::MlpParams q;
    nn::MlpParams target;
    nn::AdamState adam;
  };

  LntResetAgent(int state_dim, int action_dim, const LntConfig& config, std::uint64_t seed);

  // ResetLearner
  Vector act(const Vector& state, bool explore, Rng& rng) const override;
  TriggerDecision evaluate_trigger(const Vector& state, const Vector& action) const override;
  void add_initial_example(const envs::EnvState&, const envs::Environment&) override {}
  void begin_episode() override {}
  void record_step(const envs::EnvState& state, const Vector& action, const envs::StepResult& result,
                   const envs::Environment& env) override;
  void end_episode() override {}
  void update(Rng& rng) override;
  void save(nn::ArchiveWriter& out, const std::string& prefix) const override;
  void load(const nn::ArchiveReader& in, const std::string& prefix) override;

  /// Every member regresses on its own TD target. Returns mean member loss.
  UpdateResult lnt_critic_update(const TransitionBatch& batch);

  /// Ascend mean_b min_i Q_i(s_b, pi(s_b)).
  UpdateResult lnt_actor_update(const TransitionBatch& batch);

  /// min_i Q_i(s, a) < q_thresh.
  bool lnt_trigger(const Vector& state, const Vector& action, double q_thresh) const;
  double min_q(const Vector& state, const Vector& action) const;

  int size() const { return static_cast<int>(members_.size()); }
  const Member& member(int i) const { return members_.at(static_cast<std::size_t>(i)); }
  Member& mutable_member(int i) { return members_.at(static_cast<std::size_t>(i)); }
  const nn::MlpParams& actor() const { return actor_; }
  nn::MlpParams& mutable_actor() { return actor_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const LntConfig& config() const { return config_; }
  LntConfig& mutable_config() { return config_; }

 private:
  LntConfig config_;
  nn::MlpParams actor_;
  nn::MlpParams actor_target_;
  nn::AdamState actor_adam_;
  std::vector<Member> members_;
  ReplayBuffer buffer_;
};

}  // namespace autoreset::agents
