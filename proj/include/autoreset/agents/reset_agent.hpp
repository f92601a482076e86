#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoreset/agents/forward_agent.hpp"
#include "autoreset/agents/replay_buffer.hpp"
#include "autoreset/agents/reset_learner.hpp"
#include "autoreset/nn/mlp.hpp"

namespace autoreset::agents {

/// Upper clip of a future-success classifier value; C/(1-C) maps [0, 0.5] onto [0, 1].
inline constexpr double kClassifierClip = 0.5;

/// What the reset actor ascends for the ensemble-min member: its probability
/// C or its logit z. Both have the same per-state argmax; the logit keeps a
/// gradient where C is near 0.
enum class ActorObjective { kSigmoid, kLogit };

ActorObjective actor_objective_from_string(const std::string& s);
std::string to_string(ActorObjective o);

struct ResetAgentConfig {
  std::vector<int> hidden{400, 300};
  int ensemble_size = 5;
  double prior_scale = 3.0;
  double gamma = 0.99;
  int n_step = 10;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double classifier_lr = 1e-3;
  double noise_sigma = 0.1;
  double p_thresh = 0.1;
  ActorObjective actor_objective = ActorObjective::kSigmoid;
  std::size_t example_batch = 128;
  std::size_t segment_batch = 128;
  std::size_t buffer_capacity = 500'000;
  std::size_t initial_capacity = 10'000;
};

/// K classifier members; member logit z = z_trainable + beta * z_prior with
/// the prior network frozen.
class ClassifierEnsemble {
 public:
  struct Member {
    nn::MlpParams trainable;
    nn::MlpParams target;
    nn::MlpParams prior;
    nn::AdamState adam;
  };

  ClassifierEnsemble() = default;
  ClassifierEnsemble(int state_dim, int action_dim, const std::vector<int>& hidden, int size, double prior_scale,
                     Rng& seeder);

  int size() const { return static_cast<int>(members_.size()); }
  double prior_scale() const { return prior_scale_; }
  void set_prior_scale(double beta) { prior_scale_ = beta; }

  const Member& member(int i) const { return members_.at(static_cast<std::size_t>(i)); }
  Member& mutable_member(int i) { return members_.at(static_cast<std::size_t>(i)); }

  /// Logits (1 x B) of member i on a batch.
  nn::Matrix logits(int i, const nn::Matrix& states, const nn::Matrix& actions, bool use_target) const;

  /// Clipped member values min(sigmoid(z), 0.5), one per column.
  Eigen::RowVectorXd values(int i, const nn::Matrix& states, const nn::Matrix& actions, bool use_target) const;

  /// Per-column minimum of clipped values over members.
  Eigen::RowVectorXd min_values(const nn::Matrix& states, const nn::Matrix& actions, bool use_target) const;

  void save(nn::ArchiveWriter& out, const std::string& prefix) const;
  void load(const nn::ArchiveReader& in, const std::string& prefix);

 private:
  std::vector<Member> members_;
  double prior_scale_ = 3.0;
};

double sigmoid(double z);

/// C_i(s, a) = min(sigmoid(z_i), 0.5).
double classifier_value(const ClassifierEnsemble& ensemble, int member, const Vector& state, const Vector& action,
                        bool use_target);

/// p = C / (1 - C). Throws std::domain_error unless C lies in [0, 0.5].
double classifier_ratio(double c);

struct SuccessProbability {
  std::vector<double> per_member;
  double mean = 0.0;
  double min = 0.0;
};

/// Reduce per-member probabilities to mean and minimum.
SuccessProbability summarize_probabilities(std::vector<double> per_member);

SuccessProbability success_probability(const ClassifierEnsemble& ensemble, const Vector& state,
                                       const Vector& action);

/// True iff the ensemble-mean success probability is strictly below p_thresh.
bool should_trigger(const ClassifierEnsemble& ensemble, const Vector& state, const Vector& action, double p_thresh);

struct RceLabels {
  Vector labels;  // y, in [0, gamma / (gamma + 1)]
  Vector omega;   // classifier ratio at s_{t+1}
};

/// Closed-form bootstrapped label from the two successor ratios.
double rce_label_value(double omega_next, double omega_horizon, double gamma, int horizon);

/// Shared ensemble-minimum labels for a segment batch, using target
/// classifiers and the target reset actor.
RceLabels rce_labels(const ClassifierEnsemble& ensemble, const nn::MlpParams& actor_target,
                     const SegmentBatch& batch, double gamma);

/// The example-based reset agent.
class ResetAgent final : public ResetLearner {
 public:
  ResetAgent(int state_dim, int action_dim, const ResetAgentConfig& config, std::uint64_t seed);

  // ResetLearner
  Vector act(const Vector& state, bool explore, Rng& rng) const override;
  TriggerDecision evaluate_trigger(const Vector& state, const Vector& action) const override;
  void add_initial_example(const envs::EnvState& state, const envs::Environment& env) override;
  void begin_episode() override;
  void record_step(const envs::EnvState& state, const Vector& action, const envs::StepResult& result,
                   const envs::Environment& env) override;
  void end_episode() override;
  void update(Rng& rng) override;
  void save(nn::ArchiveWriter& out, const std::string& prefix) const override;
  void load(const nn::ArchiveReader& in, const std::string& prefix) override;

  /// Append an initial-state example. Throws std::invalid_argument if the
  /// caller has not certified the state as initial.
  void add_initial_example(const Vector& observation, bool is_initial);

  /// Classifier step on examples (label 1) and segments (bootstrapped label).
  /// Returns the mean member loss; not applied when a buffer is empty.
  UpdateResult rce_update(const nn::Matrix& examples, const SegmentBatch& segments);

  /// Ascend mean_b min_i C_i(s_b, pi(s_b)).
  UpdateResult reset_actor_update(const SegmentBatch& segments);

  /// Loss value and per-member trainable gradients for fixed labels (no update).
  std::vector<nn::MlpParams> classifier_gradients(const nn::Matrix& examples, const SegmentBatch& segments,
                                                  const RceLabels& labels, double* loss = nullptr) const;

  const ClassifierEnsemble& ensemble() const { return ensemble_; }
  ClassifierEnsemble& mutable_ensemble() { return ensemble_; }
  const nn::MlpParams& actor() const { return actor_; }
  const nn::MlpParams& actor_target() const { return actor_target_; }
  nn::MlpParams& mutable_actor() { return actor_; }
  nn::MlpParams& mutable_actor_target() { return actor_target_; }
  const StateBuffer& initial_states() const { return initial_states_; }
  StateBuffer& mutable_initial_states() { return initial_states_; }
  const SegmentBuffer& segments() const { return segments_; }
  SegmentBuffer& mutable_segments() { return segments_; }
  const ResetAgentConfig& config() const { return config_; }
  ResetAgentConfig& mutable_config() { return config_; }

 private:
  ResetAgentConfig config_;
  nn::MlpParams actor_;
  nn::MlpParams actor_target_;
  nn::AdamState actor_adam_;
  ClassifierEnsemble ensemble_;
  SegmentBuffer segments_;
  StateBuffer initial_states_;
  NStepAccumulator accumulator_;
};

}  // namespace autoreset::agents
