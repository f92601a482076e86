#include "autoreset/train/run_config.hpp"

#include <cmath>
#include <stdexcept>

namespace autoreset::train {

std::string to_string(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::kNone:
      return "none";
    case BaselineMode::kLnt:
      return "lnt";
    case BaselineMode::kLntSparse:
      return "lnt-sparse";
  }
  return "?";
}

BaselineMode baseline_from_string(const std::string& text) {
  if (text == "none" || text == "ours") return BaselineMode::kNone;
  if (text == "lnt") return BaselineMode::kLnt;
  if (text == "lnt-sparse") return BaselineMode::kLntSparse;
  throw std::invalid_argument("baseline: unknown mode '" + text + "' (expected none, lnt or lnt-sparse)");
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw std::invalid_argument("config key '" + key + "': " + what);
}

void require_rate(double v, const std::string& key) { require(v > 0.0 && v <= 1.0, key, "must lie in (0, 1]"); }

}  // namespace

void RunConfig::validate() const {
  require(env == "cliff-runner" || env == "planar-peg" || env == "spill-reacher", "env",
          "unknown environment '" + env + "'");
  require(task == "insert" || task == "remove", "task", "must be insert or remove");
  require(total_steps >= 0, "total_steps", "must be >= 0");
  if (p_thresh) require(*p_thresh >= 0.0 && *p_thresh <= 1.0, "p_thresh", "must lie in [0, 1]");
  require_rate(gamma, "gamma");
  require(gamma < 1.0, "gamma", "must be < 1");
  require(n_step >= 1, "n_step", "must be >= 1");
  require(ensemble_size >= 1, "ensemble_size", "must be >= 1");
  require(prior_scale >= 0.0, "prior_scale", "must be >= 0");
  require_rate(tau, "tau");
  require_rate(actor_lr, "actor_lr");
  require_rate(critic_lr, "critic_lr");
  require_rate(classifier_lr, "classifier_lr");
  require(!hidden_dims.empty(), "hidden_dims", "needs at least one layer");
  for (int h : hidden_dims) require(h >= 1, "hidden_dims", "entries must be >= 1");
  require(buffer_capacity >= 1, "buffer_capacity", "must be >= 1");
  require(initial_capacity >= 1, "initial_capacity", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(example_batch >= 1, "example_batch", "must be >= 1");
  require(segment_batch >= 1, "segment_batch", "must be >= 1");
  require(noise_sigma >= 0.0, "noise_sigma", "must be >= 0");
  require(reset_actor_objective == "sigmoid" || reset_actor_objective == "logit", "reset_actor_objective",
          "must be sigmoid or logit");
  require(warmup_steps >= 0, "warmup_steps", "must be >= 0");
  require(eval_interval >= 0, "eval_interval", "must be >= 0");
  require(checkpoint_interval >= 0, "checkpoint_interval", "must be >= 0");
  if (q_thresh) require(std::isfinite(*q_thresh), "q_thresh", "must be finite");
  require(lnt_ensemble_size >= 1, "lnt_ensemble_size", "must be >= 1");
}

double RunConfig::resolved_p_thresh() const {
  if (p_thresh) return *p_thresh;
  return env == "cliff-runner" ? 0.05 : 0.1;
}

double RunConfig::resolved_q_thresh() const {
  if (q_thresh) return *q_thresh;
  return baseline == BaselineMode::kLntSparse ? 0.1 : 20.0;
}

}  // namespace autoreset::train
