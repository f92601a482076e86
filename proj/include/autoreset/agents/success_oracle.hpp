#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace autoreset::agents {

/// Finite MDP with an indicator of initial (desired-outcome) states.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  /// transitions[s][a] = list of (next_state, probability).
  std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions;
  std::vector<bool> initial;

  void validate() const;
};

struct OracleResult {
  Eigen::MatrixXd p;  // num_states x num_actions
  int iterations = 0;
  bool converged = false;
};

/// Ground-truth discounted probability of (eventually) being at an initial
/// state under `policy`: the fixed point of
///   p(s, a) = (1 - gamma) g(s) + gamma E_{s'}[p(s', policy(s'))],
/// found by value iteration; `tolerance` bounds the sup-norm error.
OracleResult discounted_success_oracle(const TabularMdp& mdp, const std::vector<int>& policy, double gamma,
                                       double tolerance = 1e-10, int max_iterations = 1'000'000);

/// Steps T with gamma^T = p_thresh: the reset horizon a threshold implies.
double implied_step_budget(double gamma, double p_thresh);

}  // namespace autoreset::agents
