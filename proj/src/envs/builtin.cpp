#include "autoreset/envs/builtin.hpp"

#include <algorithm>
#include <cmath>

namespace autoreset::envs {

namespace {

EnvSpec make_spec(std::string name, int state_dim, int action_dim, double dt, int max_forward, double p_thresh) {
  return EnvSpec{std::move(name), state_dim, action_dim, dt, max_forward, 2 * max_forward, p_thresh};
}

double normalized_progress(double distance, double scale) { return 1.0 - std::min(distance / scale, 1.0); }

}  // namespace

// ---------------------------------------------------------------- cliff-runner

CliffRunner::CliffRunner() : spec_(make_spec("cliff-runner", 3, 1, kDt, 500, 0.05)) {}

EnvState CliffRunner::make_state(double x, double v, bool fallen) {
  EnvState s;
  s.physics = Vector(2);
  s.physics << x, v;
  s.observation = Vector(3);
  s.observation << x, v, fallen ? 1.0 : 0.0;
  s.irrecoverable = fallen;
  return s;
}

EnvState CliffRunner::reset(Rng& rng) const { return make_state(rng.uniform(-kResetJitter, kResetJitter), 0.0, false); }

StepResult CliffRunner::advance(const EnvState& state, const Vector& action) const {
  const double x = state.physics(0);
  const double v = state.physics(1);
  const double v_next = std::clamp(v + kAccelGain * action(0) * kDt, -kMaxSpeed, kMaxSpeed);
  const double x_next = x + v_next * kDt;
  StepResult r;
  r.next_state = make_state(x_next, v_next, x_next >= kCliffX);
  r.reward = std::max(v_next, 0.0) / 2.0;
  r.info = {distance_to_goal(r.next_state), distance_to_initial(r.next_state)};
  return r;
}

bool CliffRunner::is_initial(const EnvState& state) const {
  return !state.irrecoverable && std::abs(state.physics(0)) <= kInitialTolerance &&
         std::abs(state.physics(1)) <= kInitialTolerance;
}

double CliffRunner::distance_to_initial(const EnvState& state) const { return std::abs(state.physics(0)); }

double CliffRunner::distance_to_goal(const EnvState& state) const {
  return std::max(kCliffX - state.physics(0), 0.0);
}

// ------------------------------------------------------------------ planar-peg

PlanarPeg::PlanarPeg(Task task) : spec_(make_spec("planar-peg", 4, 2, kDt, 100, 0.1)), task_(task) {
  initial_pose_ = task == Task::kInsert ? out_pose() : in_pose();
  const Eigen::Vector2d goal_pose = task == Task::kInsert ? in_pose() : out_pose();
  initial_tip_ = tip(initial_pose_);
  goal_tip_ = tip(goal_pose);
  goal_distance_ = (initial_tip_ - goal_tip_).norm();
}

Eigen::Vector2d PlanarPeg::out_pose() { return {0.3, 1.4}; }
Eigen::Vector2d PlanarPeg::in_pose() { return {-0.4, 1.9}; }

Eigen::Vector2d PlanarPeg::tip(const Eigen::Vector2d& angles) {
  const double a1 = angles(0);
  const double a12 = angles(0) + angles(1);
  return {kLink1 * std::cos(a1) + kLink2 * std::cos(a12), kLink1 * std::sin(a1) + kLink2 * std::sin(a12)};
}

EnvState PlanarPeg::make_state(const Eigen::Vector2d& angles) {
  EnvState s;
  s.physics = angles;
  s.observation = Vector(4);
  s.observation << std::cos(angles(0)), std::sin(angles(0)), std::cos(angles(1)), std::sin(angles(1));
  return s;
}

EnvState PlanarPeg::reset(Rng& rng) const {
  Eigen::Vector2d angles = initial_pose_;
  angles(0) += rng.uniform(-kResetJitter, kResetJitter);
  angles(1) += rng.uniform(-kResetJitter, kResetJitter);
  return make_state(angles);
}

StepResult PlanarPeg::advance(const EnvState& state, const Vector& action) const {
  const Eigen::Vector2d angles = state.physics + kDt * Eigen::Vector2d(action(0), action(1));
  StepResult r;
  r.next_state = make_state(angles);
  r.info = {distance_to_goal(r.next_state), distance_to_initial(r.next_state)};
  r.reward = normalized_progress(r.info.distance_to_goal, goal_distance_);
  return r;
}

bool PlanarPeg::is_initial(const EnvState& state) const {
  return !state.irrecoverable && distance_to_initial(state) <= kInitialTolerance;
}

double PlanarPeg::distance_to_initial(const EnvState& state) const {
  return (tip(state.physics.head<2>()) - initial_tip_).norm();
}

double PlanarPeg::distance_to_goal(const EnvState& state) const {
  return (tip(state.physics.head<2>()) - goal_tip_).norm();
}

// --------------------------------------------------------------- spill-reacher

SpillReacher::SpillReacher() : spec_(make_spec("spill-reacher", 6, 2, kDt, 100, 0.1)) {}

EnvState SpillReacher::make_state(const Eigen::Vector2d& p, const Eigen::Vector2d& v, double phi, bool spilled) {
  EnvState s;
  s.physics = Vector(5);
  s.physics << p(0), p(1), v(0), v(1), phi;
  s.observation = Vector(6);
  s.observation << p(0), p(1), v(0), v(1), phi, spilled ? 1.0 : 0.0;
  s.irrecoverable = spilled;
  return s;
}

EnvState SpillReacher::reset(Rng& rng) const {
  const Eigen::Vector2d p = initial_position_ + Eigen::Vector2d(rng.uniform(-kPositionJitter, kPositionJitter),
                                                                rng.uniform(-kPositionJitter, kPositionJitter));
  const double phi = rng.uniform(-kTiltJitter, kTiltJitter);
  return make_state(p, Eigen::Vector2d::Zero(), phi, false);
}

StepResult SpillReacher::advance(const EnvState& state, const Vector& action) const {
  const Eigen::Vector2d p = state.physics.head<2>();
  const Eigen::Vector2d v = state.physics.segment<2>(2);
  const double phi = state.physics(4);
  const Eigen::Vector2d v_next =
      (v + kDt * Eigen::Vector2d(action(0), action(1))).cwiseMax(-kMaxSpeed).cwiseMin(kMaxSpeed);
  const Eigen::Vector2d p_next = p + kDt * v_next;
  const double phi_next = phi + kDt * (kTiltInstability * std::sin(phi) + kTiltCoupling * action(0));
  StepResult r;
  r.next_state = make_state(p_next, v_next, phi_next, std::abs(phi_next) > kSpillAngle);
  r.info = {distance_to_goal(r.next_state), distance_to_initial(r.next_state)};
  // Position only; the tilt does not enter the task reward.
  r.reward = normalized_progress(r.info.distance_to_goal, initial_distance_scale());
  return r;
}

bool SpillReacher::is_initial(const EnvState& state) const {
  if (state.irrecoverable) return false;
  const Eigen::Vector2d p = state.physics.head<2>();
  const Eigen::Vector2d v = state.physics.segment<2>(2);
  return (p - initial_position_).norm() <= 0.05 && v.norm() <= 0.1 && std::abs(state.physics(4)) <= 0.1;
}

double SpillReacher::distance_to_initial(const EnvState& state) const {
  return (state.physics.head<2>() - initial_position_).norm();
}

double SpillReacher::distance_to_goal(const EnvState& state) const {
  return (state.physics.head<2>() - goal_).norm();
}

}  // namespace autoreset::envs
