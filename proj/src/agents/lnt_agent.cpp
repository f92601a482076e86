#include "autoreset/agents/lnt_agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace autoreset::agents {

double default_q_thresh(envs::ResetRewardMode mode) {
  return mode == envs::ResetRewardMode::kShaped ? 20.0 : 0.1;
}

LntResetAgent::LntResetAgent(int state_dim, int action_dim, const LntConfig& config, std::uint64_t seed)
    : config_(config), buffer_(config.buffer_capacity, state_dim, action_dim) {
  if (config.ensemble_size < 1) throw std::invalid_argument("lnt agent: ensemble size must be >= 1");
  Rng seeder(seed);
  actor_ = nn::init_params(nn::policy_spec(state_dim, action_dim, config.hidden), seeder.fork_seed());
  actor_target_ = actor_;
  actor_adam_ = nn::AdamState::for_params(actor_);
  const nn::MlpSpec spec = nn::critic_spec(state_dim, action_dim, config.hidden);
  for (int i = 0; i < config.ensemble_size; ++i) {
    Member m;
    m.q = nn::init_params(spec, seeder.fork_seed());
    m.target = m.q;
    m.adam = nn::AdamState::for_params(m.q);
    members_.push_back(std::move(m));
  }
}

Vector LntResetAgent::act(const Vector& state, bool explore, Rng& rng) const {
  const Vector action = nn::evaluate_one(actor_, state);
  return explore ? explore_action(action, config_.noise_sigma, rng) : action;
}

double LntResetAgent::min_q(const Vector& state, const Vector& action) const {
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& m : members_) lowest = std::min(lowest, nn::evaluate_one(m.q, state, &action)(0));
  return lowest;
}

bool LntResetAgent::lnt_trigger(const Vector& state, const Vector& action, double q_thresh) const {
  return min_q(state, action) < q_thresh;
}

TriggerDecision LntResetAgent::evaluate_trigger(const Vector& state, const Vector& action) const {
  const double q = min_q(state, action);
  return {q < config_.q_thresh, q};
}

void LntResetAgent::record_step(const envs::EnvState& state, const Vector& action, const envs::StepResult& result,
                                const envs::Environment& env) {
  const bool entered_irrecoverable = !state.irrecoverable && result.next_state.irrecoverable;
  buffer_.store(Transition{state.observation, action, env.reset_reward(result.next_state, config_.mode),
                           result.next_state.observation, entered_irrecoverable});
}

void LntResetAgent::update(Rng& rng) {
  if (buffer_.empty()) return;
  const TransitionBatch batch = buffer_.sample(config_.batch_size, rng);
  lnt_critic_update(batch);
  lnt_actor_update(batch);
}

UpdateResult LntResetAgent::lnt_critic_update(const TransitionBatch& batch) {
  const nn::Matrix next_actions = nn::evaluate(actor_target_, batch.next_states);
  const Vector continuing = Vector::Ones(batch.terminals.size()) - batch.terminals;
  const double n = static_cast<double>(batch.states.cols());
  double total = 0.0;
  bool applied = true;
  for (auto& m : members_) {
    const nn::Matrix next_q = nn::evaluate(m.target, batch.next_states, next_actions);
    const Vector y = batch.rewards + config_.gamma * continuing.cwiseProduct(next_q.row(0).transpose());
    const auto cache = nn::forward(m.q, batch.states, batch.actions);
    const Eigen::RowVectorXd err = cache.output().row(0) - y.transpose();
    const double loss = err.squaredNorm() / n;
    total += loss;
    if (!std::isfinite(loss)) {
      applied = false;
      continue;
    }
    const auto grads = nn::backward(m.q, cache, (2.0 / n) * nn::Matrix(err));
    if (!nn::adam_step(m.q, grads.params, m.adam, config_.critic_lr)) {
      applied = false;
      continue;
    }
    nn::soft_update(m.target, m.q, config_.tau);
  }
  return {total / static_cast<double>(members_.size()), applied};
}

UpdateResult LntResetAgent::lnt_actor_update(const TransitionBatch& batch) {
  const Eigen::Index n = batch.states.cols();
  const auto actor_cache = nn::forward(actor_, batch.states);
  const nn::Matrix& actions = actor_cache.output();

  std::vector<nn::ForwardCache> caches;
  nn::Matrix q(size(), n);
  for (int i = 0; i < size(); ++i) {
    caches.push_back(nn::forward(member(i).q, batch.states, actions));
    q.row(i) = caches.back().output().row(0);
  }
  std::vector<int> argmin(static_cast<std::size_t>(n));
  double objective = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index best = 0;
    objective += q.col(j).minCoeff(&best);
    argmin[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  objective /= static_cast<double>(n);
  if (!std::isfinite(objective)) return {objective, false};

  nn::Matrix action_grad = nn::Matrix::Zero(actions.rows(), n);
  for (int i = 0; i < size(); ++i) {
    nn::Matrix g = nn::Matrix::Zero(1, n);
    bool any = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (argmin[static_cast<std::size_t>(j)] == i) {
        g(0, j) = -1.0 / static_cast<double>(n);
        any = true;
      }
    }
    if (any) action_grad += nn::backward(member(i).q, caches[static_cast<std::size_t>(i)], g, false).action_grad;
  }
  const auto grads = nn::backward(actor_, actor_cache, action_grad);
  if (!nn::adam_step(actor_, grads.params, actor_adam_, config_.actor_lr)) return {objective, false};
  nn::soft_update(actor_target_, actor_, config_.tau);
  return {objective, true};
}

void LntResetAgent::save(nn::ArchiveWriter& out, const std::string& prefix) const {
  out.add_params(prefix + ".actor", actor_);
  out.add_params(prefix + ".actor_target", actor_target_);
  out.add_adam(prefix + ".actor_adam", actor_adam_);
  out.add_meta(prefix + ".size", std::to_string(size()));
  for (int i = 0; i < size(); ++i) {
    const std::string p = prefix + ".q" + std::to_string(i);
    out.add_params(p, member(i).q);
    out.add_params(p + ".target", member(i).target);
    out.add_adam(p + ".adam", member(i).adam);
  }
  buffer_.save(out, prefix + ".buffer");
}

void LntResetAgent::load(const nn::ArchiveReader& in, const std::string& prefix) {
  if (std::stoi(in.meta(prefix + ".size")) != size()) {
    throw nn::ArchiveError("lnt agent: ensemble size in checkpoint differs from configuration");
  }
  auto actor = in.params(prefix + ".actor");
  if (!(actor.spec() == actor_.spec())) throw nn::ArchiveError("lnt agent: actor spec mismatch");
  actor_ = std::move(actor);
  actor_target_ = in.params(prefix + ".actor_target");
  actor_adam_ = in.adam(prefix + ".actor_adam", actor_);
  for (int i = 0; i < size(); ++i) {
    const std::string p = prefix + ".q" + std::to_string(i);
    Member m{in.params(p), in.params(p + ".target"), {}};
    m.adam = in.adam(p + ".adam", m.q);
    members_[static_cast<std::size_t>(i)] = std::move(m);
  }
  buffer_.load(in, prefix + ".buffer");
}

}  // namespace autoreset::agents
