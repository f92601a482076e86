#include "autoreset/agents/forward_agent.hpp"

#include <cmath>

namespace autoreset::agents {

Vector explore_action(const Vector& action, double sigma, Rng& rng) {
  Vector noisy = action;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += sigma * rng.normal();
  return noisy.cwiseMax(-1.0).cwiseMin(1.0);
}

ForwardAgent::ForwardAgent(int state_dim, int action_dim, const DdpgConfig& config, std::uint64_t seed)
    : config_(config) {
  Rng seeder(seed);
  actor_ = nn::init_params(nn::policy_spec(state_dim, action_dim, config.hidden), seeder.fork_seed());
  critic_ = nn::init_params(nn::critic_spec(state_dim, action_dim, config.hidden), seeder.fork_seed());
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_adam_ = nn::AdamState::for_params(actor_);
  critic_adam_ = nn::AdamState::for_params(critic_);
}

Vector ForwardAgent::select_action(const Vector& state, bool explore, Rng& rng) const {
  const Vector action = nn::evaluate_one(actor_, state);
  return explore ? explore_action(action, config_.noise_sigma, rng) : action;
}

Vector ForwardAgent::td_targets(const TransitionBatch& batch) const {
  const nn::Matrix next_actions = nn::evaluate(actor_target_, batch.next_states);
  const nn::Matrix next_q = nn::evaluate(critic_target_, batch.next_states, next_actions);
  const Vector continuing = Vector::Ones(batch.terminals.size()) - batch.terminals;
  return batch.rewards + config_.gamma * continuing.cwiseProduct(next_q.row(0).transpose());
}

UpdateResult ForwardAgent::critic_update(const TransitionBatch& batch) {
  const Vector y = td_targets(batch);
  const auto cache = nn::forward(critic_, batch.states, batch.actions);
  const Eigen::RowVectorXd err = cache.output().row(0) - y.transpose();
  const double n = static_cast<double>(err.size());
  const double loss = err.squaredNorm() / n;
  if (!std::isfinite(loss)) return {loss, false};

  const nn::Matrix grad_out = (2.0 / n) * err;
  const auto grads = nn::backward(critic_, cache, grad_out);
  if (!nn::adam_step(critic_, grads.params, critic_adam_, config_.critic_lr)) return {loss, false};
  nn::soft_update(critic_target_, critic_, config_.tau);
  nn::soft_update(actor_target_, actor_, config_.tau);
  return {loss, true};
}

UpdateResult ForwardAgent::actor_update(const TransitionBatch& batch) {
  const auto actor_cache = nn::forward(actor_, batch.states);
  const auto critic_cache = nn::forward(critic_, batch.states, actor_cache.output());
  const double n = static_cast<double>(batch.states.cols());
  const double objective = critic_cache.output().sum() / n;
  if (!std::isfinite(objective)) return {objective, false};

  // Minimise -mean Q.
  const nn::Matrix grad_q = nn::Matrix::Constant(1, batch.states.cols(), -1.0 / n);
  const auto critic_grads = nn::backward(critic_, critic_cache, grad_q, /*want_param_grads=*/false);
  const auto actor_grads = nn::backward(actor_, actor_cache, critic_grads.action_grad);
  if (!nn::adam_step(actor_, actor_grads.params, actor_adam_, config_.actor_lr)) return {objective, false};
  return {objective, true};
}

void ForwardAgent::save(nn::ArchiveWriter& out, const std::string& prefix) const {
  out.add_params(prefix + ".actor", actor_);
  out.add_params(prefix + ".actor_target", actor_target_);
  out.add_params(prefix + ".critic", critic_);
  out.add_params(prefix + ".critic_target", critic_target_);
  out.add_adam(prefix + ".actor_adam", actor_adam_);
  out.add_adam(prefix + ".critic_adam", critic_adam_);
}

void ForwardAgent::load(const nn::ArchiveReader& in, const std::string& prefix) {
  auto actor = in.params(prefix + ".actor");
  auto critic = in.params(prefix + ".critic");
  if (!(actor.spec() == actor_.spec()) || !(critic.spec() == critic_.spec())) {
    throw nn::ArchiveError("forward agent: network spec in checkpoint differs from configuration");
  }
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  actor_target_ = in.params(prefix + ".actor_target");
  critic_target_ = in.params(prefix + ".critic_target");
  actor_adam_ = in.adam(prefix + ".actor_adam", actor_);
  critic_adam_ = in.adam(prefix + ".critic_adam", critic_);
}

}  // namespace autoreset::agents
