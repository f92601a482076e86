#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "autoreset/util/random.hpp"

namespace autoreset::envs {

using Vector = Eigen::VectorXd;

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  double dt = 0.05;
  int max_forward_steps = 100;
  int max_reset_steps = 200;  // always 2 * max_forward_steps
  double default_p_thresh = 0.1;
};

/// Full environment state. `physics` is the integrator state, `observation`
/// is what agents see.
struct EnvState {
  Vector observation;
  Vector physics;
  bool irrecoverable = false;

  bool operator==(const EnvState& other) const {
    return irrecoverable == other.irrecoverable && observation == other.observation && physics == other.physics;
  }
};

struct StepInfo {
  double distance_to_goal = 0.0;
  double distance_to_initial = 0.0;
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  StepInfo info;
};

enum class ResetRewardMode { kShaped, kSparse };

/// Environment contract. Implementations hold only task constants; all
/// dynamics are pure functions of (state, action).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  /// Sample from the (unimodal) initial-state distribution.
  virtual EnvState reset(Rng& rng) const = 0;

  /// Advance one control step. Action components are clipped to [-1, 1].
  /// Throws std::invalid_argument for a non-finite or mis-sized action.
  StepResult step(const EnvState& state, const Vector& action) const;

  /// True iff the state is recoverable and inside the initial tolerance region.
  virtual bool is_initial(const EnvState& state) const = 0;

  virtual double distance_to_initial(const EnvState& state) const = 0;
  virtual double distance_to_goal(const EnvState& state) const = 0;
  /// Normaliser for the shaped reset reward.
  virtual double initial_distance_scale() const = 0;

  double reset_reward(const EnvState& state, ResetRewardMode mode) const;

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  /// Dynamics for a recoverable state with an already clipped action.
  virtual StepResult advance(const EnvState& state, const Vector& action) const = 0;
};

/// Factory over the built-in environments: "cliff-runner", "planar-peg",
/// "spill-reacher". `task` selects "insert" or "remove" for planar-peg.
std::unique_ptr<Environment> make_environment(const std::string& name, const std::string& task = "insert");

bool is_known_environment(const std::string& name);

}  // namespace autoreset::envs
