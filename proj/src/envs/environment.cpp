#include "autoreset/envs/environment.hpp"

#include <algorithm>
#include <stdexcept>

#include "autoreset/envs/builtin.hpp"

namespace autoreset::envs {

StepResult Environment::step(const EnvState& state, const Vector& action) const {
  if (action.size() != spec().action_dim) {
    throw std::invalid_argument(spec().name + ": action has " + std::to_string(action.size()) +
                                " components, expected " + std::to_string(spec().action_dim));
  }
  if (!action.allFinite()) throw std::invalid_argument(spec().name + ": non-finite action");
  if (state.irrecoverable) {
    StepResult frozen{state, 0.0, {distance_to_goal(state), distance_to_initial(state)}};
    return frozen;
  }
  const Vector clipped = action.cwiseMax(-1.0).cwiseMin(1.0);
  return advance(state, clipped);
}

double Environment::reset_reward(const EnvState& state, ResetRewardMode mode) const {
  if (mode == ResetRewardMode::kSparse) return is_initial(state) ? 1.0 : 0.0;
  return 1.0 - std::min(distance_to_initial(state) / initial_distance_scale(), 1.0);
}

bool is_known_environment(const std::string& name) {
  return name == "cliff-runner" || name == "planar-peg" || name == "spill-reacher";
}

std::unique_ptr<Environment> make_environment(const std::string& name, const std::string& task) {
  if (name == "cliff-runner") return std::make_unique<CliffRunner>();
  if (name == "spill-reacher") return std::make_unique<SpillReacher>();
  if (name == "planar-peg") {
    if (task == "insert") return std::make_unique<PlanarPeg>(PlanarPeg::Task::kInsert);
    if (task == "remove") return std::make_unique<PlanarPeg>(PlanarPeg::Task::kRemove);
    throw std::invalid_argument("planar-peg: unknown task '" + task + "' (expected insert or remove)");
  }
  throw std::invalid_argument("unknown environment '" + name + "'");
}

}  // namespace autoreset::envs
