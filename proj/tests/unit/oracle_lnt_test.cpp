#include <cmath>

#include <gtest/gtest.h>

#include "autoreset/agents/lnt_agent.hpp"
#include "autoreset/agents/success_oracle.hpp"
#include "autoreset/envs/builtin.hpp"

using namespace autoreset;
using namespace autoreset::agents;

namespace {

// Deterministic chain 0..n-1; action 0 steps left, action 1 steps right; state 0 absorbing.
TabularMdp chain(int n) {
  TabularMdp m;
  m.num_states = n;
  m.num_actions = 2;
  m.transitions.resize(static_cast<std::size_t>(n));
  m.initial.assign(static_cast<std::size_t>(n), false);
  m.initial[0] = true;
  for (int s = 0; s < n; ++s) {
    const int left = s == 0 ? 0 : s - 1;
    const int right = s == 0 ? 0 : std::min(s + 1, n - 1);
    m.transitions[static_cast<std::size_t>(s)] = {{{left, 1.0}}, {{right, 1.0}}};
  }
  return m;
}

LntConfig small_lnt(envs::ResetRewardMode mode) {
  LntConfig c;
  c.hidden = {16, 16};
  c.ensemble_size = 4;
  c.batch_size = 8;
  c.mode = mode;
  c.q_thresh = default_q_thresh(mode);
  return c;
}

void set_constant_q(LntResetAgent& agent, int i, double q) {
  auto& m = agent.mutable_member(i);
  m.q = nn::MlpParams::zeros(m.q.spec());
  m.q.mutable_layers().back().bias << q;
  m.target = m.q;
}

TransitionBatch terminal_batch(Rng& rng, int n, int state_dim, int action_dim) {
  TransitionBatch b{Matrix::NullaryExpr(state_dim, n, [&] { return rng.uniform(-1, 1); }),
                    Matrix::NullaryExpr(action_dim, n, [&] { return rng.uniform(-1, 1); }),
                    Vector::NullaryExpr(n, [&] { return rng.uniform(); }),
                    Matrix::NullaryExpr(state_dim, n, [&] { return rng.uniform(-1, 1); }), Vector::Ones(n)};
  return b;
}

}  // namespace

TEST(Oracle, AbsorbingInitialStateHasProbabilityOne) {
  const auto r = discounted_success_oracle(chain(6), std::vector<int>(6, 0), 0.99);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.p(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(r.p(0, 1), 1.0, 1e-9);
}

TEST(Oracle, ChainProbabilityIsDiscountPowerOfStepsToGo) {
  const double g = 0.99;
  const auto r = discounted_success_oracle(chain(6), std::vector<int>(6, 0), g);
  ASSERT_TRUE(r.converged);
  for (int s = 1; s < 6; ++s) {
    EXPECT_NEAR(r.p(s, 0), std::pow(g, s), 1e-9) << s;
    EXPECT_NEAR(r.p(s, 1), std::pow(g, std::min(s + 1, 5) + 1), 1e-9) << s;
  }
}

TEST(Oracle, StochasticTwoStateClosedForm) {
  // State 1 reaches the absorbing initial state 0 with probability q per step.
  const double q = 0.3, g = 0.9;
  TabularMdp m;
  m.num_states = 2;
  m.num_actions = 1;
  m.initial = {true, false};
  m.transitions = {{{{0, 1.0}}}, {{{0, q}, {1, 1.0 - q}}}};
  const auto r = discounted_success_oracle(m, {0, 0}, g);
  EXPECT_NEAR(r.p(1, 0), g * q / (1.0 - g * (1.0 - q)), 1e-9);
}

TEST(Oracle, PolicyThatNeverArrivesHasProbabilityZero) {
  const auto r = discounted_success_oracle(chain(4), {0, 1, 1, 1}, 0.99);
  EXPECT_NEAR(r.p(3, 1), 0.0, 1e-9);
  EXPECT_NEAR(r.p(3, 0), 0.0, 1e-9);  // stepping left lands where the policy walks back right
}

TEST(Oracle, RejectsMalformedInput) {
  auto m = chain(3);
  EXPECT_THROW(discounted_success_oracle(m, {0, 0}, 0.99), std::invalid_argument);
  EXPECT_THROW(discounted_success_oracle(m, {0, 0, 0}, 1.0), std::invalid_argument);
  m.transitions[1][0] = {{0, 0.5}};
  EXPECT_THROW(discounted_success_oracle(m, {0, 0, 0}, 0.99), std::invalid_argument);
}

TEST(Oracle, ImpliedStepBudget) {
  EXPECT_NEAR(implied_step_budget(0.99, 0.1), std::log(0.1) / std::log(0.99), 1e-12);
  EXPECT_NEAR(implied_step_budget(0.99, 0.1), 229.1, 0.05);
  EXPECT_NEAR(std::pow(0.99, implied_step_budget(0.99, 0.05)), 0.05, 1e-12);
  EXPECT_EQ(implied_step_budget(0.99, 1.0), 0.0);
  EXPECT_THROW(implied_step_budget(0.99, 0.0), std::invalid_argument);
}

TEST(Lnt, DefaultThresholds) {
  EXPECT_EQ(default_q_thresh(envs::ResetRewardMode::kShaped), 20.0);
  EXPECT_EQ(default_q_thresh(envs::ResetRewardMode::kSparse), 0.1);
}

TEST(Lnt, MembersAreDistinct) {
  auto config = small_lnt(envs::ResetRewardMode::kShaped);
  config.ensemble_size = 20;
  LntResetAgent agent(3, 1, config, 1);
  for (int i = 1; i < agent.size(); ++i) EXPECT_FALSE(agent.member(i).q.same_values(agent.member(0).q));
}

TEST(Lnt, SparseRewardIsStoredForInitialNextStates) {
  envs::CliffRunner env;
  LntResetAgent agent(3, 1, small_lnt(envs::ResetRewardMode::kSparse), 2);
  const auto near = envs::CliffRunner::make_state(0.0, 0.0, false);
  const auto far = envs::CliffRunner::make_state(3.0, 0.0, false);
  const Vector a = Vector::Zero(1);
  agent.record_step(near, a, env.step(near, a), env);
  agent.record_step(far, a, env.step(far, a), env);
  EXPECT_EQ(agent.buffer().at(0).reward, 1.0);
  EXPECT_EQ(agent.buffer().at(1).reward, 0.0);
  EXPECT_FALSE(agent.buffer().at(0).terminal);
}

TEST(Lnt, ShapedRewardsStayInUnitInterval) {
  envs::CliffRunner env;
  LntResetAgent agent(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 3);
  Rng rng(4);
  auto s = env.reset(rng);
  for (int t = 0; t < 400; ++t) {
    const Vector a = Vector::Constant(1, rng.uniform(-0.5, 1.0));
    const auto r = env.step(s, a);
    agent.record_step(s, a, r, env);
    s = r.next_state;
  }
  for (std::size_t i = 0; i < agent.buffer().size(); ++i) {
    ASSERT_GE(agent.buffer().at(i).reward, 0.0);
    ASSERT_LE(agent.buffer().at(i).reward, 1.0);
  }
}

TEST(Lnt, CliffEntryIsTerminal) {
  envs::CliffRunner env;
  LntResetAgent agent(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 5);
  const auto edge = envs::CliffRunner::make_state(9.99, 2.0, false);
  const Vector a = Vector::Ones(1);
  const auto r = env.step(edge, a);
  agent.record_step(edge, a, r, env);
  agent.record_step(r.next_state, a, env.step(r.next_state, a), env);
  EXPECT_TRUE(agent.buffer().at(0).terminal);
  EXPECT_FALSE(agent.buffer().at(1).terminal);
}

TEST(Lnt, ZeroDiscountFitsTheReward) {
  auto config = small_lnt(envs::ResetRewardMode::kShaped);
  config.gamma = 0.0;
  config.hidden = {32, 32};
  LntResetAgent agent(3, 1, config, 6);
  Rng rng(7);
  auto batch = terminal_batch(rng, 4, 3, 1);
  batch.terminals.setZero();  // gamma = 0 alone removes bootstrapping
  for (int k = 0; k < 5000; ++k) agent.lnt_critic_update(batch);
  for (int i = 0; i < agent.size(); ++i) {
    const nn::Matrix q = nn::evaluate(agent.member(i).q, batch.states, batch.actions);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(q(0, j), batch.rewards(j), 2e-2);
  }
}

TEST(Lnt, TriggerUsesEnsembleMinimum) {
  LntResetAgent agent(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 8);
  for (int i = 0; i < agent.size(); ++i) set_constant_q(agent, i, 25.0);
  const Vector s = Vector::Zero(3), a = Vector::Zero(1);
  EXPECT_FALSE(agent.lnt_trigger(s, a, 20.0));
  EXPECT_FALSE(agent.evaluate_trigger(s, a).trigger);
  set_constant_q(agent, 2, 19.0);
  EXPECT_TRUE(agent.lnt_trigger(s, a, 20.0));
  EXPECT_DOUBLE_EQ(agent.evaluate_trigger(s, a).score, 19.0);
  EXPECT_FALSE(agent.lnt_trigger(s, a, 19.0));  // strict
  EXPECT_TRUE(agent.lnt_trigger(s, a, 19.5));
}

TEST(Lnt, ZeroCriticsLeaveActorUnchanged) {
  LntResetAgent agent(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 9);
  for (int i = 0; i < agent.size(); ++i) set_constant_q(agent, i, 0.0);
  const auto before = agent.actor();
  Rng rng(10);
  agent.lnt_actor_update(terminal_batch(rng, 8, 3, 1));
  EXPECT_TRUE(agent.actor().same_values(before));
}

TEST(Lnt, ActorUpdateIsShiftInvariant) {
  LntResetAgent a(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 11);
  LntResetAgent b(3, 1, small_lnt(envs::ResetRewardMode::kShaped), 11);
  for (int i = 0; i < b.size(); ++i) b.mutable_member(i).q.mutable_layers().back().bias.array() += 7.0;
  Rng rng(12);
  const auto batch = terminal_batch(rng, 8, 3, 1);
  for (int k = 0; k < 20; ++k) {
    a.lnt_actor_update(batch);
    b.lnt_actor_update(batch);
  }
  for (std::size_t l = 0; l < a.actor().layers().size(); ++l) {
    EXPECT_LT((a.actor().layers()[l].weight - b.actor().layers()[l].weight).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lnt, SingleMemberMatchesPlainActorCriticUpdate) {
  auto config = small_lnt(envs::ResetRewardMode::kShaped);
  config.ensemble_size = 1;
  LntResetAgent lnt(3, 1, config, 13);
  DdpgConfig ddpg;
  ddpg.hidden = config.hidden;
  ForwardAgent plain(3, 1, ddpg, 99);
  plain.mutable_actor() = lnt.actor();
  plain.mutable_critic() = lnt.member(0).q;
  Rng rng(14);
  const auto batch = terminal_batch(rng, 8, 3, 1);
  const auto r1 = lnt.lnt_actor_update(batch);
  const auto r2 = plain.actor_update(batch);
  EXPECT_NEAR(r1.value, r2.value, 1e-14);
  for (std::size_t l = 0; l < lnt.actor().layers().size(); ++l) {
    EXPECT_LT((lnt.actor().layers()[l].weight - plain.actor().layers()[l].weight).cwiseAbs().maxCoeff(), 1e-14);
  }
}
