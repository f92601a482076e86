#pragma once

#include <Eigen/Dense>

#include "autoreset/envs/environment.hpp"

namespace autoreset::envs {

/// 1-D runner rewarded for forward velocity, with an absorbing cliff.
/// physics = (x, v), observation = (x, v, fallen).
class CliffRunner final : public Environment {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kCliffX = 10.0;
  static constexpr double kMaxSpeed = 2.0;
  static constexpr double kAccelGain = 2.0;
  static constexpr double kResetJitter = 0.05;
  static constexpr double kInitialTolerance = 0.1;

  CliffRunner();

  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) const override;
  bool is_initial(const EnvState& state) const override;
  double distance_to_initial(const EnvState& state) const override;
  double distance_to_goal(const EnvState& state) const override;
  double initial_distance_scale() const override { return kCliffX; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<CliffRunner>(*this); }

  static EnvState make_state(double x, double v, bool fallen);

 protected:
  StepResult advance(const EnvState& state, const Vector& action) const override;

 private:
  EnvSpec spec_;
};

/// Two-link planar arm under joint-velocity control moving a peg between an
/// "out" pose and an "in" pose. physics = (theta1, theta2),
/// observation = (cos t1, sin t1, cos t2, sin t2). No irrecoverable states.
class PlanarPeg final : public Environment {
 public:
  enum class Task { kInsert, kRemove };

  static constexpr double kDt = 0.05;
  static constexpr double kLink1 = 1.0;
  static constexpr double kLink2 = 0.8;
  static constexpr double kResetJitter = 0.02;
  static constexpr double kInitialTolerance = 0.05;

  explicit PlanarPeg(Task task = Task::kInsert);

  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) const override;
  bool is_initial(const EnvState& state) const override;
  double distance_to_initial(const EnvState& state) const override;
  double distance_to_goal(const EnvState& state) const override;
  double initial_distance_scale() const override { return goal_distance_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<PlanarPeg>(*this); }

  Task task() const { return task_; }
  static Eigen::Vector2d out_pose();
  static Eigen::Vector2d in_pose();
  static Eigen::Vector2d tip(const Eigen::Vector2d& angles);

  Eigen::Vector2d initial_pose() const { return initial_pose_; }
  Eigen::Vector2d initial_tip() const { return initial_tip_; }
  Eigen::Vector2d goal_tip() const { return goal_tip_; }

  static EnvState make_state(const Eigen::Vector2d& angles);

 protected:
  StepResult advance(const EnvState& state, const Vector& action) const override;

 private:
  EnvSpec spec_;
  Task task_;
  Eigen::Vector2d initial_pose_;
  Eigen::Vector2d initial_tip_;
  Eigen::Vector2d goal_tip_;
  double goal_distance_;
};

/// Point mass carrying an open container whose tilt is unstable and is
/// disturbed by x-acceleration. Tilting past the limit spills (absorbing).
/// physics = (px, py, vx, vy, phi), observation = (px, py, vx, vy, phi, spilled).
class SpillReacher final : public Environment {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 1.0;
  static constexpr double kTiltInstability = 0.8;
  static constexpr double kTiltCoupling = 0.6;
  static constexpr double kSpillAngle = 0.5;
  static constexpr double kPositionJitter = 0.02;
  static constexpr double kTiltJitter = 0.01;

  SpillReacher();

  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) const override;
  bool is_initial(const EnvState& state) const override;
  double distance_to_initial(const EnvState& state) const override;
  double distance_to_goal(const EnvState& state) const override;
  double initial_distance_scale() const override { return (goal_ - initial_position_).norm(); }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<SpillReacher>(*this); }

  static EnvState make_state(const Eigen::Vector2d& p, const Eigen::Vector2d& v, double phi, bool spilled);

 protected:
  StepResult advance(const EnvState& state, const Vector& action) const override;

 private:
  EnvSpec spec_;
  Eigen::Vector2d initial_position_{0.0, 0.0};
  Eigen::Vector2d goal_{1.0, 0.0};
};

}  // namespace autoreset::envs
