#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "autoreset/agents/lnt_agent.hpp"
#include "autoreset/agents/reset_agent.hpp"
#include "autoreset/envs/builtin.hpp"
#include "autoreset/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace autoreset;
using namespace autoreset::train;

namespace {

RunConfig tiny(const std::string& env = "planar-peg", std::int64_t steps = 1500) {
  RunConfig c;
  c.env = env;
  c.total_steps = steps;
  c.hidden_dims = {8, 8};
  c.batch_size = 8;
  c.example_batch = 4;
  c.segment_batch = 4;
  c.warmup_steps = 200;
  c.eval_interval = 500;
  c.buffer_capacity = 10000;
  c.lnt_ensemble_size = 3;
  c.seed = 5;
  return c;
}

void make_pessimistic(Trainer& t, double logit) {
  auto& agent = dynamic_cast<agents::ResetAgent&>(t.reset_learner());
  auto& e = agent.mutable_ensemble();
  for (int i = 0; i < e.size(); ++i) {
    auto& m = e.mutable_member(i);
    m.trainable = nn::MlpParams::zeros(m.trainable.spec());
    m.trainable.mutable_layers().back().bias << logit;
    m.target = m.trainable;
    m.prior = nn::MlpParams::zeros(m.prior.spec());
  }
}

std::map<std::string, std::string> snapshot_bytes(const Trainer& t, const fs::path& dir) {
  nn::ArchiveWriter w;
  t.save(w);
  fs::remove_all(dir);
  w.write(dir);
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[entry.path().filename().string()] = ss.str();
  }
  fs::remove_all(dir);
  return out;
}

fs::path scratch(const std::string& name) {
  return fs::temp_directory_path() / ("autoreset_trainer_" + name + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST(Trainer, ZeroStepsDoesNothing) {
  auto c = tiny();
  c.total_steps = 0;
  Trainer t(c);
  int rows = 0;
  t.set_row_sink([&](const MetricsRow&) { ++rows; });
  const auto& m = t.run();
  EXPECT_EQ(rows, 0);
  EXPECT_EQ(m.total_steps(), 0);
  EXPECT_TRUE(m.episodes.empty());
  EXPECT_TRUE(m.evals.empty());
  EXPECT_EQ(m.reset_attempts, 0);
}

TEST(Trainer, InvalidConfigIsRejectedBeforeWork) {
  auto c = tiny();
  c.p_thresh = 1.5;
  EXPECT_THROW(Trainer{c}, std::invalid_argument);
  c = tiny();
  c.env = "nowhere";
  EXPECT_THROW(Trainer{c}, std::invalid_argument);
}

TEST(Trainer, ZeroThresholdNeverTriggers) {
  auto c = tiny();
  c.p_thresh = 0.0;
  Trainer t(c);
  make_pessimistic(t, -60.0);
  const auto& m = t.run();
  EXPECT_EQ(m.triggered_resets, 0);
  EXPECT_GT(m.requested_resets, 0);
}

TEST(Trainer, UntrainedEnsembleDoesNotTrigger) {
  Trainer t(tiny());
  Rng rng(3);
  envs::PlanarPeg env;
  for (int k = 0; k < 1000; ++k) {
    const auto s = envs::PlanarPeg::make_state({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    const Eigen::Vector2d a(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const auto d = t.reset_learner().evaluate_trigger(s.observation, a);
    ASSERT_FALSE(d.trigger);
    ASSERT_GT(d.score, 0.95);
  }
}

TEST(Trainer, TriggeredActionIsNeverExecutedOrStored) {
  auto c = tiny();
  c.warmup_steps = 0;
  Trainer t(c);
  make_pessimistic(t, -5.0);  // p ~ 0.0067 everywhere
  const auto start = t.state();
  const auto out = t.run_forward_episode();
  EXPECT_EQ(out.termination, Termination::kTriggered);
  EXPECT_EQ(out.steps, 1);  // the opening action is exempt
  EXPECT_EQ(t.forward_buffer().size(), 1u);
  EXPECT_EQ(t.metrics().forward_steps, 1);
  EXPECT_EQ(t.global_step(), 1);
  EXPECT_EQ(t.forward_buffer().at(0).state, start.observation);
  EXPECT_EQ(t.forward_buffer().at(0).next_state, t.state().observation);
  ASSERT_EQ(t.metrics().triggers.size(), 1u);
  EXPECT_EQ(t.metrics().triggers[0].observation, t.state().observation);
  EXPECT_NEAR(t.metrics().triggers[0].p_bar, std::exp(-5.0), 1e-12);
}

TEST(Trainer, ResetFromInitialStateSucceedsInZeroSteps) {
  Trainer t(tiny());
  const auto start = t.state();
  t.run_forward_episode();
  t.set_state(start);
  const auto out = t.run_reset_episode();
  EXPECT_EQ(out.termination, Termination::kResetSuccess);
  EXPECT_EQ(out.steps, 0);
  EXPECT_EQ(t.metrics().reset_attempts, 1);
  EXPECT_EQ(t.metrics().reset_successes, 1);
}

TEST(Trainer, IrrecoverableEntryEndsInManualReset) {
  Trainer t(tiny("cliff-runner"));
  t.run_forward_episode();
  t.set_state(envs::CliffRunner::make_state(11.0, 0.0, true));
  const auto out = t.run_reset_episode();
  EXPECT_EQ(out.termination, Termination::kManualReset);
  EXPECT_EQ(out.steps, 1000);
  EXPECT_EQ(t.metrics().manual_resets, 1);
  EXPECT_EQ(t.metrics().reset_attempts, 1);
  EXPECT_TRUE(t.environment().is_initial(t.state()));
}

TEST(Trainer, AccountingHoldsAtEveryRow) {
  for (const std::string baseline : {"none", "lnt", "lnt-sparse"}) {
    auto c = tiny("cliff-runner", 4000);
    c.baseline = baseline_from_string(baseline);
    Trainer t(c);
    std::int64_t rows = 0, forward_rows = 0, reset_rows = 0;
    t.set_row_sink([&](const MetricsRow& row) {
      ++rows;
      forward_rows += row.kind == EpisodeKind::kForward;
      reset_rows += row.kind == EpisodeKind::kReset;
      t.metrics().check_accounting(row.kind == EpisodeKind::kForward);
      ASSERT_EQ(row.global_step, t.metrics().total_steps());
      ASSERT_GE(row.forward_share, 0.0);
      ASSERT_LE(row.forward_share, 1.0);
    });
    const auto& m = t.run();
    EXPECT_EQ(forward_rows, reset_rows) << baseline;
    EXPECT_EQ(m.reset_attempts, m.reset_successes + m.manual_resets);
    EXPECT_EQ(m.reset_attempts, m.triggered_resets + m.requested_resets);
    EXPECT_EQ(m.total_steps(), t.global_step());
    EXPECT_GE(t.global_step(), c.total_steps);
    EXPECT_EQ(curriculum_stat(m).size(), static_cast<std::size_t>(m.triggered_resets));
    EXPECT_EQ(static_cast<std::int64_t>(m.evals.size()), t.global_step() / c.eval_interval);
  }
}

TEST(Trainer, OneInitialExamplePerForwardEpisode) {
  Trainer t(tiny());
  t.run();
  const auto& agent = dynamic_cast<const agents::ResetAgent&>(t.reset_learner());
  EXPECT_EQ(static_cast<std::int64_t>(agent.initial_states().size()), t.metrics().forward_episodes);
}

TEST(Trainer, ManualResetsOnlyAfterExhaustedBudgets) {
  Trainer t(tiny("cliff-runner", 5000));
  t.run();
  std::int64_t manual = 0;
  for (const auto& e : t.metrics().episodes) {
    if (e.outcome.termination == Termination::kManualReset) {
      ++manual;
      EXPECT_EQ(e.outcome.steps, 1000);
    }
    if (e.outcome.kind == EpisodeKind::kForward) EXPECT_LE(e.outcome.steps, 500);
  }
  EXPECT_EQ(manual, t.metrics().manual_resets);
}

TEST(Trainer, DeterministicGivenSeed) {
  auto run_rows = [] {
    Trainer t(tiny("cliff-runner", 3000));
    std::vector<std::tuple<std::int64_t, double, int, double>> rows;
    t.set_row_sink([&](const MetricsRow& r) {
      rows.emplace_back(r.global_step, r.ret, static_cast<int>(r.termination), r.p_bar_at_trigger.value_or(-1));
    });
    t.run();
    return rows;
  };
  EXPECT_EQ(run_rows(), run_rows());
}

TEST(Trainer, DifferentSeedsDiffer) {
  auto c1 = tiny("cliff-runner", 2000), c2 = c1;
  c2.seed = 6;
  Trainer a(c1), b(c2);
  a.run();
  b.run();
  EXPECT_NE(a.forward_buffer().at(0).action, b.forward_buffer().at(0).action);
}

TEST(Trainer, EvaluationTouchesNoLearnerState) {
  Trainer t(tiny());
  t.run();
  const auto before = snapshot_bytes(t, scratch("before"));
  Rng r1(77), r2(77);
  const double ret1 = t.evaluate_snapshot(r1);
  const double ret2 = t.evaluate_snapshot(r2);
  EXPECT_EQ(ret1, ret2);
  EXPECT_GE(ret1, 0.0);
  EXPECT_EQ(snapshot_bytes(t, scratch("after")), before);
}

TEST(Trainer, ScriptedPegPolicyIsNearTheKinematicBound) {
  // Joint-space straight line at full speed toward the goal pose.
  envs::PlanarPeg env(envs::PlanarPeg::Task::kInsert);
  auto s = envs::PlanarPeg::make_state(env.initial_pose());
  const Eigen::Vector2d goal = envs::PlanarPeg::in_pose();
  double scripted = 0.0;
  for (int k = 0; k < env.spec().max_forward_steps; ++k) {
    const Eigen::Vector2d a = ((goal - s.physics) / envs::PlanarPeg::kDt).cwiseMax(-1.0).cwiseMin(1.0);
    const auto r = env.step(s, a);
    scripted += r.reward;
    s = r.next_state;
  }
  // Upper bound: the tip cannot move faster than L1 + 2 L2 per unit joint speed.
  const double d0 = env.initial_distance_scale();
  const double vmax = envs::PlanarPeg::kLink1 + 2.0 * envs::PlanarPeg::kLink2;
  double bound = 0.0;
  for (int k = 1; k <= env.spec().max_forward_steps; ++k) {
    bound += 1.0 - std::max(d0 - vmax * envs::PlanarPeg::kDt * k, 0.0) / d0;
  }
  EXPECT_LE(scripted, bound + 1e-9);
  EXPECT_GE(scripted, 0.95 * bound);
}

TEST(Trainer, ResumedTotalStepsExtendTheRun) {
  Trainer t(tiny("planar-peg", 600));
  t.run();
  const auto step = t.global_step();
  t.set_total_steps(1200);
  EXPECT_FALSE(t.finished());
  t.run();
  EXPECT_GT(t.global_step(), step);
  EXPECT_GE(t.global_step(), 1200);
}
