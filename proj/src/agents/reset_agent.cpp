#include "autoreset/agents/reset_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace autoreset::agents {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// CE(sigmoid(z); y) = y * softplus(-z) + (1 - y) * softplus(z).
double cross_entropy_logit(double z, double y) { return y * softplus(-z) + (1.0 - y) * softplus(z); }

double clipped_ratio(double c) {
  const double clipped = std::clamp(c, 0.0, kClassifierClip);
  return clipped / (1.0 - clipped);
}

nn::Matrix hstack(const nn::Matrix& a, const nn::Matrix& b) {
  nn::Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

ActorObjective actor_objective_from_string(const std::string& s) {
  if (s == "sigmoid") return ActorObjective::kSigmoid;
  if (s == "logit") return ActorObjective::kLogit;
  throw std::invalid_argument("unknown reset actor objective '" + s + "' (sigmoid, logit)");
}

std::string to_string(ActorObjective o) { return o == ActorObjective::kLogit ? "logit" : "sigmoid"; }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// --------------------------------------------------------- ClassifierEnsemble

ClassifierEnsemble::ClassifierEnsemble(int state_dim, int action_dim, const std::vector<int>& hidden, int size,
                                       double prior_scale, Rng& seeder)
    : prior_scale_(prior_scale) {
  if (size < 1) throw std::invalid_argument("classifier ensemble: size must be >= 1");
  const nn::MlpSpec spec = nn::critic_spec(state_dim, action_dim, hidden);
  for (int i = 0; i < size; ++i) {
    Member m;
    m.trainable = nn::init_params(spec, seeder.fork_seed());
    m.prior = nn::init_params(spec, seeder.fork_seed());
    m.target = m.trainable;
    m.adam = nn::AdamState::for_params(m.trainable);
    members_.push_back(std::move(m));
  }
}

nn::Matrix ClassifierEnsemble::logits(int i, const nn::Matrix& states, const nn::Matrix& actions,
                                      bool use_target) const {
  const Member& m = member(i);
  nn::Matrix z = nn::evaluate(use_target ? m.target : m.trainable, states, actions);
  if (prior_scale_ != 0.0) z += prior_scale_ * nn::evaluate(m.prior, states, actions);
  return z;
}

Eigen::RowVectorXd ClassifierEnsemble::values(int i, const nn::Matrix& states, const nn::Matrix& actions,
                                              bool use_target) const {
  const nn::Matrix z = logits(i, states, actions, use_target);
  Eigen::RowVectorXd c(z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) c(j) = std::min(sigmoid(z(0, j)), kClassifierClip);
  return c;
}

Eigen::RowVectorXd ClassifierEnsemble::min_values(const nn::Matrix& states, const nn::Matrix& actions,
                                                  bool use_target) const {
  Eigen::RowVectorXd out = values(0, states, actions, use_target);
  for (int i = 1; i < size(); ++i) out = out.cwiseMin(values(i, states, actions, use_target));
  return out;
}

void ClassifierEnsemble::save(nn::ArchiveWriter& out, const std::string& prefix) const {
  out.add_meta(prefix + ".size", std::to_string(size()));
  for (int i = 0; i < size(); ++i) {
    const std::string p = prefix + ".m" + std::to_string(i);
    out.add_params(p + ".trainable", member(i).trainable);
    out.add_params(p + ".target", member(i).target);
    out.add_params(p + ".prior", member(i).prior);
    out.add_adam(p + ".adam", member(i).adam);
  }
}

void ClassifierEnsemble::load(const nn::ArchiveReader& in, const std::string& prefix) {
  if (std::stoi(in.meta(prefix + ".size")) != size()) {
    throw nn::ArchiveError("classifier ensemble: member count in checkpoint differs from configuration");
  }
  std::vector<Member> loaded;
  for (int i = 0; i < size(); ++i) {
    const std::string p = prefix + ".m" + std::to_string(i);
    Member m;
    m.trainable = in.params(p + ".trainable");
    if (!(m.trainable.spec() == member(i).trainable.spec())) {
      throw nn::ArchiveError("classifier ensemble: network spec in checkpoint differs from configuration");
    }
    m.target = in.params(p + ".target");
    m.prior = in.params(p + ".prior");
    m.adam = in.adam(p + ".adam", m.trainable);
    loaded.push_back(std::move(m));
  }
  members_ = std::move(loaded);
}

// ------------------------------------------------------------- free functions

double classifier_value(const ClassifierEnsemble& ensemble, int member, const Vector& state, const Vector& action,
                        bool use_target) {
  const nn::Matrix s = state;
  const nn::Matrix a = action;
  return ensemble.values(member, s, a, use_target)(0);
}

double classifier_ratio(double c) {
  if (!(c >= 0.0 && c <= kClassifierClip)) {
    throw std::domain_error("classifier_ratio: value " + std::to_string(c) + " outside [0, 0.5]; clip first");
  }
  return c / (1.0 - c);
}

SuccessProbability summarize_probabilities(std::vector<double> per_member) {
  if (per_member.empty()) throw std::invalid_argument("success probability: empty ensemble");
  SuccessProbability out;
  out.mean = std::accumulate(per_member.begin(), per_member.end(), 0.0) / static_cast<double>(per_member.size());
  out.min = *std::min_element(per_member.begin(), per_member.end());
  out.per_member = std::move(per_member);
  return out;
}

SuccessProbability success_probability(const ClassifierEnsemble& ensemble, const Vector& state,
                                       const Vector& action) {
  const nn::Matrix s = state;
  const nn::Matrix a = action;
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(ensemble.size()));
  for (int i = 0; i < ensemble.size(); ++i) p.push_back(classifier_ratio(ensemble.values(i, s, a, false)(0)));
  return summarize_probabilities(std::move(p));
}

bool should_trigger(const ClassifierEnsemble& ensemble, const Vector& state, const Vector& action, double p_thresh) {
  return success_probability(ensemble, state, action).mean < p_thresh;
}

double rce_label_value(double omega_next, double omega_horizon, double gamma, int horizon) {
  const double g1 = gamma * omega_next;
  const double gn = std::pow(gamma, horizon) * omega_horizon;
  return 0.5 * (g1 / (g1 + 1.0) + gn / (gn + 1.0));
}

RceLabels rce_labels(const ClassifierEnsemble& ensemble, const nn::MlpParams& actor_target,
                     const SegmentBatch& batch, double gamma) {
  const nn::Matrix next_actions = nn::evaluate(actor_target, batch.next_states);
  const nn::Matrix horizon_actions = nn::evaluate(actor_target, batch.horizon_states);
  const Eigen::RowVectorXd c_next = ensemble.min_values(batch.next_states, next_actions, true);
  const Eigen::RowVectorXd c_horizon = ensemble.min_values(batch.horizon_states, horizon_actions, true);

  RceLabels out{Vector(c_next.size()), Vector(c_next.size())};
  for (Eigen::Index j = 0; j < c_next.size(); ++j) {
    const double omega_next = clipped_ratio(c_next(j));
    const double omega_horizon = clipped_ratio(c_horizon(j));
    out.omega(j) = omega_next;
    out.labels(j) = rce_label_value(omega_next, omega_horizon, gamma, batch.horizons(j));
  }
  return out;
}

// ---------------------------------------------------------------- ResetAgent

ResetAgent::ResetAgent(int state_dim, int action_dim, const ResetAgentConfig& config, std::uint64_t seed)
    : config_(config),
      segments_(config.buffer_capacity, state_dim, action_dim),
      initial_states_(config.initial_capacity, state_dim),
      accumulator_(config.n_step) {
  if (config.n_step < 1) throw std::invalid_argument("reset agent: n_step must be >= 1");
  Rng seeder(seed);
  actor_ = nn::init_params(nn::policy_spec(state_dim, action_dim, config.hidden), seeder.fork_seed());
  actor_target_ = actor_;
  actor_adam_ = nn::AdamState::for_params(actor_);
  ensemble_ = ClassifierEnsemble(state_dim, action_dim, config.hidden, config.ensemble_size, config.prior_scale,
                                 seeder);
}

Vector ResetAgent::act(const Vector& state, bool explore, Rng& rng) const {
  const Vector action = nn::evaluate_one(actor_, state);
  return explore ? explore_action(action, config_.noise_sigma, rng) : action;
}

TriggerDecision ResetAgent::evaluate_trigger(const Vector& state, const Vector& action) const {
  const double mean = success_probability(ensemble_, state, action).mean;
  return {mean < config_.p_thresh, mean};
}

void ResetAgent::add_initial_example(const Vector& observation, bool is_initial) {
  if (!is_initial) throw std::invalid_argument("reset agent: only initial states may be stored as examples");
  initial_states_.store(observation);
}

void ResetAgent::add_initial_example(const envs::EnvState& state, const envs::Environment& env) {
  add_initial_example(state.observation, env.is_initial(state));
}

void ResetAgent::begin_episode() {
  for (const auto& seg : accumulator_.finish()) segments_.store(seg);
}

void ResetAgent::record_step(const envs::EnvState& state, const Vector& action, const envs::StepResult& result,
                             const envs::Environment&) {
  for (const auto& seg : accumulator_.push(state.observation, action, result.next_state.observation)) {
    segments_.store(seg);
  }
}

void ResetAgent::end_episode() {
  for (const auto& seg : accumulator_.finish()) segments_.store(seg);
}

void ResetAgent::update(Rng& rng) {
  if (initial_states_.empty() || segments_.empty()) return;
  const nn::Matrix examples = initial_states_.sample(config_.example_batch, rng);
  const SegmentBatch batch = segments_.sample(config_.segment_batch, rng);
  rce_update(examples, batch);
  reset_actor_update(batch);
}

std::vector<nn::MlpParams> ResetAgent::classifier_gradients(const nn::Matrix& examples, const SegmentBatch& segments,
                                                            const RceLabels& labels, double* loss) const {
  const Eigen::Index n_ex = examples.cols();
  const Eigen::Index n_seg = segments.states.cols();
  const double gamma = config_.gamma;
  const nn::Matrix example_actions = nn::evaluate(actor_, examples);
  const nn::Matrix states = hstack(examples, segments.states);
  const nn::Matrix actions = hstack(example_actions, segments.actions);

  std::vector<nn::MlpParams> grads;
  double total_loss = 0.0;
  for (int i = 0; i < ensemble_.size(); ++i) {
    const auto& m = ensemble_.member(i);
    const auto cache = nn::forward(m.trainable, states, actions);
    nn::Matrix z = cache.output();
    if (ensemble_.prior_scale() != 0.0) z += ensemble_.prior_scale() * nn::evaluate(m.prior, states, actions);

    nn::Matrix grad_z(1, z.cols());
    double member_loss = 0.0;
    for (Eigen::Index j = 0; j < n_ex; ++j) {
      const double w = (1.0 - gamma) / static_cast<double>(n_ex);
      member_loss += w * cross_entropy_logit(z(0, j), 1.0);
      grad_z(0, j) = w * (sigmoid(z(0, j)) - 1.0);
    }
    for (Eigen::Index j = 0; j < n_seg; ++j) {
      const double w = (1.0 + gamma * labels.omega(j)) / static_cast<double>(n_seg);
      const double y = labels.labels(j);
      const double zj = z(0, n_ex + j);
      member_loss += w * cross_entropy_logit(zj, y);
      grad_z(0, n_ex + j) = w * (sigmoid(zj) - y);
    }
    total_loss += member_loss;
    grads.push_back(nn::backward(m.trainable, cache, grad_z).params);
  }
  if (loss) *loss = total_loss / static_cast<double>(ensemble_.size());
  return grads;
}

UpdateResult ResetAgent::rce_update(const nn::Matrix& examples, const SegmentBatch& segments) {
  if (examples.cols() == 0 || segments.states.cols() == 0) return {0.0, false};
  const RceLabels labels = rce_labels(ensemble_, actor_target_, segments, config_.gamma);
  double loss = 0.0;
  auto grads = classifier_gradients(examples, segments, labels, &loss);
  if (!std::isfinite(loss)) return {loss, false};
  bool applied = true;
  for (int i = 0; i < ensemble_.size(); ++i) {
    auto& m = ensemble_.mutable_member(i);
    if (!nn::adam_step(m.trainable, grads[static_cast<std::size_t>(i)], m.adam, config_.classifier_lr)) {
      applied = false;
      continue;
    }
    nn::soft_update(m.target, m.trainable, config_.tau);
  }
  return {loss, applied};
}

UpdateResult ResetAgent::reset_actor_update(const SegmentBatch& segments) {
  const Eigen::Index n = segments.states.cols();
  if (n == 0) return {0.0, false};
  const auto actor_cache = nn::forward(actor_, segments.states);
  const nn::Matrix& actions = actor_cache.output();
  const double beta = ensemble_.prior_scale();

  std::vector<nn::ForwardCache> train_caches, prior_caches;
  nn::Matrix c(ensemble_.size(), n);
  for (int i = 0; i < ensemble_.size(); ++i) {
    const auto& m = ensemble_.member(i);
    train_caches.push_back(nn::forward(m.trainable, segments.states, actions));
    nn::Matrix z = train_caches.back().output();
    if (beta != 0.0) {
      prior_caches.push_back(nn::forward(m.prior, segments.states, actions));
      z += beta * prior_caches.back().output();
    }
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = sigmoid(z(0, j));
  }

  std::vector<int> argmin(static_cast<std::size_t>(n));
  double objective = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index best = 0;
    c.col(j).minCoeff(&best);
    argmin[static_cast<std::size_t>(j)] = static_cast<int>(best);
    objective += c(best, j);
  }
  objective /= static_cast<double>(n);
  if (!std::isfinite(objective)) return {objective, false};

  nn::Matrix action_grad = nn::Matrix::Zero(actions.rows(), n);
  for (int i = 0; i < ensemble_.size(); ++i) {
    nn::Matrix g = nn::Matrix::Zero(1, n);
    bool any = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (argmin[static_cast<std::size_t>(j)] != i) continue;
      const double cij = c(i, j);
      const double dz = config_.actor_objective == ActorObjective::kLogit ? 1.0 : cij * (1.0 - cij);
      g(0, j) = -dz / static_cast<double>(n);
      any = true;
    }
    if (!any) continue;
    const auto& m = ensemble_.member(i);
    action_grad += nn::backward(m.trainable, train_caches[static_cast<std::size_t>(i)], g, false).action_grad;
    if (beta != 0.0) {
      action_grad += beta * nn::backward(m.prior, prior_caches[static_cast<std::size_t>(i)], g, false).action_grad;
    }
  }
  const auto actor_grads = nn::backward(actor_, actor_cache, action_grad);
  if (!nn::adam_step(actor_, actor_grads.params, actor_adam_, config_.actor_lr)) return {objective, false};
  nn::soft_update(actor_target_, actor_, config_.tau);
  return {objective, true};
}

void ResetAgent::save(nn::ArchiveWriter& out, const std::string& prefix) const {
  out.add_params(prefix + ".actor", actor_);
  out.add_params(prefix + ".actor_target", actor_target_);
  out.add_adam(prefix + ".actor_adam", actor_adam_);
  ensemble_.save(out, prefix + ".ensemble");
  segments_.save(out, prefix + ".segments");
  initial_states_.save(out, prefix + ".initial_states");
}

void ResetAgent::load(const nn::ArchiveReader& in, const std::string& prefix) {
  auto actor = in.params(prefix + ".actor");
  if (!(actor.spec() == actor_.spec())) {
    throw nn::ArchiveError("reset agent: network spec in checkpoint differs from configuration");
  }
  actor_ = std::move(actor);
  actor_target_ = in.params(prefix + ".actor_target");
  actor_adam_ = in.adam(prefix + ".actor_adam", actor_);
  ensemble_.load(in, prefix + ".ensemble");
  segments_.load(in, prefix + ".segments");
  initial_states_.load(in, prefix + ".initial_states");
}

}  // namespace autoreset::agents
