#include "autoreset/train/trainer.hpp"

#include <sstream>
#include <stdexcept>

#include "autoreset/agents/lnt_agent.hpp"
#include "autoreset/agents/reset_agent.hpp"

namespace autoreset::train {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

agents::DdpgConfig ddpg_config(const RunConfig& c) {
  agents::DdpgConfig d;
  d.hidden = c.hidden_dims;
  d.gamma = c.gamma;
  d.tau = c.tau;
  d.actor_lr = c.actor_lr;
  d.critic_lr = c.critic_lr;
  d.noise_sigma = c.noise_sigma;
  return d;
}

const RunConfig& validated(const RunConfig& c) {
  c.validate();
  return c;
}

std::unique_ptr<envs::Environment> environment_for(const RunConfig& c) {
  return envs::make_environment(c.env, c.task);
}

}  // namespace

std::unique_ptr<agents::ResetLearner> make_reset_learner(const RunConfig& c, int state_dim, int action_dim,
                                                         std::uint64_t seed) {
  if (c.baseline == BaselineMode::kNone) {
    agents::ResetAgentConfig r;
    r.hidden = c.hidden_dims;
    r.ensemble_size = c.ensemble_size;
    r.prior_scale = c.prior_scale;
    r.gamma = c.gamma;
    r.n_step = c.n_step;
    r.tau = c.tau;
    r.actor_lr = c.actor_lr;
    r.classifier_lr = c.classifier_lr;
    r.noise_sigma = c.noise_sigma;
    r.p_thresh = c.resolved_p_thresh();
    r.actor_objective = agents::actor_objective_from_string(c.reset_actor_objective);
    r.example_batch = static_cast<std::size_t>(c.example_batch);
    r.segment_batch = static_cast<std::size_t>(c.segment_batch);
    r.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
    r.initial_capacity = static_cast<std::size_t>(c.initial_capacity);
    return std::make_unique<agents::ResetAgent>(state_dim, action_dim, r, seed);
  }
  agents::LntConfig l;
  l.hidden = c.hidden_dims;
  l.ensemble_size = c.lnt_ensemble_size;
  l.gamma = c.gamma;
  l.tau = c.tau;
  l.actor_lr = c.actor_lr;
  l.critic_lr = c.critic_lr;
  l.noise_sigma = c.noise_sigma;
  l.mode = c.baseline == BaselineMode::kLnt ? envs::ResetRewardMode::kShaped : envs::ResetRewardMode::kSparse;
  l.q_thresh = c.resolved_q_thresh();
  l.batch_size = static_cast<std::size_t>(c.batch_size);
  l.buffer_capacity = static_cast<std::size_t>(c.buffer_capacity);
  return std::make_unique<agents::LntResetAgent>(state_dim, action_dim, l, seed);
}

Trainer::Trainer(RunConfig config)
    : config_(validated(config)),
      env_(environment_for(config_)),
      forward_(env_->spec().state_dim, env_->spec().action_dim, ddpg_config(config_), derive_seed(config_.seed, 0)),
      reset_(make_reset_learner(config_, env_->spec().state_dim, env_->spec().action_dim,
                                derive_seed(config_.seed, 1))),
      forward_buffer_(static_cast<std::size_t>(config_.buffer_capacity), env_->spec().state_dim,
                      env_->spec().action_dim),
      rng_(derive_seed(config_.seed, 2)),
      next_eval_(config_.eval_interval),
      eval_seed_(derive_seed(config_.seed, 3)) {
  state_ = env_->reset(rng_);
}

Eigen::VectorXd Trainer::random_action() {
  Eigen::VectorXd a(env_->spec().action_dim);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng_.uniform(-1.0, 1.0);
  return a;
}

const RunMetrics& Trainer::run() {
  while (run_episode_pair()) {
  }
  return metrics_;
}

bool Trainer::run_episode_pair() {
  if (finished()) return false;
  run_forward_episode();
  run_reset_episode();
  run_due_evaluations();
  return true;
}

EpisodeOutcome Trainer::run_forward_episode() {
  if (!env_->is_initial(state_)) throw std::logic_error("forward episode must start from an initial state");
  reset_->add_initial_example(state_, *env_);
  metrics_.forward_episodes += 1;

  EpisodeOutcome out{EpisodeKind::kForward};
  std::optional<TriggerEvent> trigger;
  const int max_steps = env_->spec().max_forward_steps;
  const auto batch_size = static_cast<std::size_t>(config_.batch_size);

  while (true) {
    const bool warmup = in_warmup();
    const Eigen::VectorXd action =
        warmup ? random_action() : forward_.select_action(state_.observation, /*explore=*/true, rng_);
    // The episode opens at a certified initial state, so its first action is never vetoed.
    if (config_.trigger_enabled && out.steps > 0) {
      const auto decision = reset_->evaluate_trigger(state_.observation, action);
      if (decision.trigger) {
        out.termination = Termination::kTriggered;
        trigger = TriggerEvent{global_step_, state_.observation, env_->distance_to_initial(state_), decision.score};
        metrics_.triggered_resets += 1;
        metrics_.triggers.push_back(*trigger);
        break;
      }
    }
    if (out.steps >= max_steps) {
      out.termination = Termination::kRequested;
      metrics_.requested_resets += 1;
      break;
    }

    const envs::StepResult result = env_->step(state_, action);
    const bool entered = !state_.irrecoverable && result.next_state.irrecoverable;
    forward_buffer_.store(
        {state_.observation, action, result.reward, result.next_state.observation, entered});
    metrics_.forward_steps += 1;
    global_step_ += 1;
    if (!warmup) {
      const auto batch = forward_buffer_.sample(batch_size, rng_);
      forward_.critic_update(batch);
      forward_.actor_update(batch);
    }
    out.ret += result.reward;
    out.steps += 1;
    state_ = result.next_state;
    if (entered) {
      metrics_.irrecoverable_entries += 1;
      out.entered_irrecoverable = true;
      out.termination = Termination::kRequested;
      metrics_.requested_resets += 1;
      break;
    }
  }

  metrics_.episodes.push_back({out, global_step_});
  metrics_.check_accounting(/*pending_reset=*/true);
  emit(out, trigger);
  return out;
}

EpisodeOutcome Trainer::run_reset_episode() {
  metrics_.reset_attempts += 1;
  reset_->begin_episode();
  EpisodeOutcome out{EpisodeKind::kReset};
  const int max_steps = env_->spec().max_reset_steps;

  while (true) {
    if (env_->is_initial(state_)) {
      out.termination = Termination::kResetSuccess;
      metrics_.reset_successes += 1;
      break;
    }
    if (out.steps >= max_steps) {
      out.termination = Termination::kManualReset;
      metrics_.manual_resets += 1;
      state_ = env_->reset(rng_);
      break;
    }
    const bool warmup = in_warmup();
    const Eigen::VectorXd action =
        warmup ? random_action() : reset_->act(state_.observation, /*explore=*/true, rng_);
    const envs::StepResult result = env_->step(state_, action);
    reset_->record_step(state_, action, result, *env_);
    if (!state_.irrecoverable && result.next_state.irrecoverable) {
      metrics_.irrecoverable_entries += 1;
      out.entered_irrecoverable = true;
    }
    metrics_.reset_steps += 1;
    global_step_ += 1;
    if (!warmup) reset_->update(rng_);
    out.ret += result.reward;
    out.steps += 1;
    state_ = result.next_state;
  }
  reset_->end_episode();

  metrics_.episodes.push_back({out, global_step_});
  metrics_.check_accounting(/*pending_reset=*/false);
  emit(out, std::nullopt);
  return out;
}

std::pair<EpisodeOutcome, EpisodeOutcome> Trainer::evaluation_pair(Rng& eval_rng) const {
  const auto env = env_->clone();
  envs::EnvState s = env->reset(eval_rng);
  EpisodeOutcome fwd{EpisodeKind::kEval};
  while (true) {
    const Eigen::VectorXd action = forward_.select_action(s.observation, /*explore=*/false, eval_rng);
    if (config_.eval_trigger && fwd.steps > 0 && reset_->evaluate_trigger(s.observation, action).trigger) {
      fwd.termination = Termination::kTriggered;
      break;
    }
    if (fwd.steps >= env->spec().max_forward_steps) {
      fwd.termination = Termination::kRequested;
      break;
    }
    const auto result = env->step(s, action);
    fwd.ret += result.reward;
    fwd.steps += 1;
    const bool entered = !s.irrecoverable && result.next_state.irrecoverable;
    s = result.next_state;
    if (entered) {
      fwd.entered_irrecoverable = true;
      fwd.termination = Termination::kRequested;
      break;
    }
  }

  EpisodeOutcome rst{EpisodeKind::kEval};
  while (true) {
    if (env->is_initial(s)) {
      rst.termination = Termination::kResetSuccess;
      break;
    }
    if (rst.steps >= env->spec().max_reset_steps) {
      rst.termination = Termination::kManualReset;
      break;
    }
    const auto result = env->step(s, reset_->act(s.observation, /*explore=*/false, eval_rng));
    rst.ret += result.reward;
    rst.steps += 1;
    s = result.next_state;
  }
  return {fwd, rst};
}

double Trainer::evaluate_snapshot(Rng& eval_rng) const { return evaluation_pair(eval_rng).first.ret; }

void Trainer::run_due_evaluations() {
  if (config_.eval_interval <= 0) return;
  while (global_step_ >= next_eval_) {
    Rng eval_rng(eval_seed_ + static_cast<std::uint64_t>(eval_count_));
    const auto [fwd, rst] = evaluation_pair(eval_rng);
    metrics_.evals.push_back({global_step_, fwd.ret});
    eval_count_ += 1;
    next_eval_ += config_.eval_interval;
    emit(fwd, std::nullopt);
  }
}

void Trainer::emit(const EpisodeOutcome& outcome, const std::optional<TriggerEvent>& trigger) {
  MetricsRow row;
  row.global_step = global_step_;
  row.episode_index = episode_index_++;
  row.kind = outcome.kind;
  row.ret = outcome.ret;
  row.termination = outcome.termination;
  row.manual_resets = metrics_.manual_resets;
  row.triggered = metrics_.triggered_resets;
  row.requested = metrics_.requested_resets;
  row.forward_share = metrics_.forward_share();
  row.success_rate = metrics_.success_rate();
  if (trigger) {
    row.p_bar_at_trigger = trigger->p_bar;
    row.distance_at_trigger = trigger->distance_to_initial;
  }
  if (sink_) sink_(row);
}

// ------------------------------------------------------------- persistence

namespace {

void add_vector(nn::ArchiveWriter& out, const std::string& name, const Eigen::VectorXd& v) {
  out.add_array(name, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd read_vector(const nn::ArchiveReader& in, const std::string& name, Eigen::Index size) {
  const auto values = in.array(name, static_cast<std::size_t>(size));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), size);
}

}  // namespace

void Trainer::save(nn::ArchiveWriter& out) const {
  out.add_meta("run.global_step", std::to_string(global_step_));
  out.add_meta("run.episode_index", std::to_string(episode_index_));
  out.add_meta("run.next_eval", std::to_string(next_eval_));
  out.add_meta("run.eval_count", std::to_string(eval_count_));
  out.add_meta("run.rng", rng_.serialize());
  out.add_meta("run.irrecoverable", state_.irrecoverable ? "1" : "0");
  add_vector(out, "run.observation", state_.observation);
  add_vector(out, "run.physics", state_.physics);

  const std::vector<std::int64_t> counters{metrics_.manual_resets,   metrics_.triggered_resets,
                                           metrics_.requested_resets, metrics_.reset_attempts,
                                           metrics_.reset_successes, metrics_.forward_steps,
                                           metrics_.reset_steps,      metrics_.forward_episodes,
                                           metrics_.irrecoverable_entries};
  std::string counter_text;
  for (auto c : counters) counter_text += std::to_string(c) + " ";
  out.add_meta("metrics.counters", counter_text);

  std::vector<double> evals;
  for (const auto& e : metrics_.evals) {
    evals.push_back(static_cast<double>(e.global_step));
    evals.push_back(e.forward_return);
  }
  out.add_array("metrics.evals", evals);

  const auto obs_dim = static_cast<std::size_t>(env_->spec().state_dim);
  std::vector<double> triggers;
  for (const auto& t : metrics_.triggers) {
    triggers.push_back(static_cast<double>(t.global_step));
    triggers.push_back(t.distance_to_initial);
    triggers.push_back(t.p_bar);
    triggers.insert(triggers.end(), t.observation.data(), t.observation.data() + obs_dim);
  }
  out.add_array("metrics.triggers", triggers);

  std::vector<double> episodes;
  for (const auto& e : metrics_.episodes) {
    episodes.push_back(static_cast<double>(e.outcome.kind));
    episodes.push_back(e.outcome.steps);
    episodes.push_back(e.outcome.ret);
    episodes.push_back(static_cast<double>(e.outcome.termination));
    episodes.push_back(e.outcome.entered_irrecoverable ? 1.0 : 0.0);
    episodes.push_back(static_cast<double>(e.global_step));
  }
  out.add_array("metrics.episodes", episodes);

  forward_.save(out, "forward");
  forward_buffer_.save(out, "forward.buffer");
  reset_->save(out, "reset");
}

void Trainer::load(const nn::ArchiveReader& in) {
  global_step_ = std::stoll(in.meta("run.global_step"));
  episode_index_ = std::stoll(in.meta("run.episode_index"));
  next_eval_ = std::stoll(in.meta("run.next_eval"));
  eval_count_ = std::stoll(in.meta("run.eval_count"));
  rng_.deserialize(in.meta("run.rng"));
  state_.irrecoverable = in.meta("run.irrecoverable") == "1";
  state_.observation = read_vector(in, "run.observation", state_.observation.size());
  state_.physics = read_vector(in, "run.physics", state_.physics.size());

  {
    std::istringstream is(in.meta("metrics.counters"));
    RunMetrics m;
    for (std::int64_t* c : {&m.manual_resets, &m.triggered_resets, &m.requested_resets, &m.reset_attempts,
                            &m.reset_successes, &m.forward_steps, &m.reset_steps, &m.forward_episodes,
                            &m.irrecoverable_entries}) {
      if (!(is >> *c)) throw nn::ArchiveError("checkpoint: malformed metrics counters");
    }
    const auto& evals = in.array("metrics.evals");
    if (evals.size() % 2 != 0) throw nn::ArchiveError("checkpoint: malformed eval log");
    for (std::size_t i = 0; i < evals.size(); i += 2) {
      m.evals.push_back({static_cast<std::int64_t>(evals[i]), evals[i + 1]});
    }
    const auto obs_dim = static_cast<std::size_t>(env_->spec().state_dim);
    const auto& trig = in.array("metrics.triggers");
    const std::size_t stride = 3 + obs_dim;
    if (trig.size() % stride != 0) throw nn::ArchiveError("checkpoint: malformed trigger log");
    for (std::size_t i = 0; i < trig.size(); i += stride) {
      TriggerEvent t;
      t.global_step = static_cast<std::int64_t>(trig[i]);
      t.distance_to_initial = trig[i + 1];
      t.p_bar = trig[i + 2];
      t.observation = Eigen::Map<const Eigen::VectorXd>(trig.data() + i + 3, static_cast<Eigen::Index>(obs_dim));
      m.triggers.push_back(std::move(t));
    }
    const auto& eps = in.array("metrics.episodes");
    if (eps.size() % 6 != 0) throw nn::ArchiveError("checkpoint: malformed episode log");
    for (std::size_t i = 0; i < eps.size(); i += 6) {
      EpisodeOutcome o;
      o.kind = static_cast<EpisodeKind>(static_cast<int>(eps[i]));
      o.steps = static_cast<int>(eps[i + 1]);
      o.ret = eps[i + 2];
      o.termination = static_cast<Termination>(static_cast<int>(eps[i + 3]));
      o.entered_irrecoverable = eps[i + 4] != 0.0;
      m.episodes.push_back({o, static_cast<std::int64_t>(eps[i + 5])});
    }
    m.check_accounting(false);
    metrics_ = std::move(m);
  }

  forward_.load(in, "forward");
  forward_buffer_.load(in, "forward.buffer");
  reset_->load(in, "reset");
}

}  // namespace autoreset::train
