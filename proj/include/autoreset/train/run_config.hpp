#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace autoreset::train {

enum class BaselineMode { kNone, kLnt, kLntSparse };

std::string to_string(BaselineMode mode);
BaselineMode baseline_from_string(const std::string& text);

/// Every knob of a training run. Defaults follow the published setup
/// (p_thresh 0.1, K = 5, beta = 3, tau = 1e-3, 500k buffers, 400-300 nets).
struct RunConfig {
  std::string env = "planar-peg";
  std::string task = "insert";
  std::int64_t total_steps = 100'000;
  /// Unset means the environment's default (0.05 for cliff-runner, else 0.1).
  std::optional<double> p_thresh;
  double gamma = 0.99;
  int n_step = 10;
  int ensemble_size = 5;
  double prior_scale = 3.0;
  double tau = 1e-3;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double classifier_lr = 1e-3;
  std::vector<int> hidden_dims{400, 300};
  std::int64_t buffer_capacity = 500'000;
  std::int64_t initial_capacity = 10'000;
  std::int64_t batch_size = 256;
  std::int64_t example_batch = 128;
  std::int64_t segment_batch = 128;
  double noise_sigma = 0.1;
  /// Reset actor ascends the ensemble-min `sigmoid` or its `logit`.
  std::string reset_actor_objective = "sigmoid";
  std::int64_t warmup_steps = 1'000;
  std::int64_t eval_interval = 5'000;
  std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::uint64_t seed = 0;
  BaselineMode baseline = BaselineMode::kNone;
  /// Unset means 20 (lnt, shaped) or 0.1 (lnt-sparse).
  std::optional<double> q_thresh;
  int lnt_ensemble_size = 20;
  bool trigger_enabled = true;
  bool eval_trigger = true;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;

  double resolved_p_thresh() const;
  double resolved_q_thresh() const;
};

}  // namespace autoreset::train
