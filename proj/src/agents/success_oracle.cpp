#include "autoreset/agents/success_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace autoreset::agents {

void TabularMdp::validate() const {
  if (num_states < 1 || num_actions < 1) throw std::invalid_argument("tabular mdp: empty state or action set");
  if (static_cast<int>(transitions.size()) != num_states || static_cast<int>(initial.size()) != num_states) {
    throw std::invalid_argument("tabular mdp: table sizes do not match num_states");
  }
  for (const auto& row : transitions) {
    if (static_cast<int>(row.size()) != num_actions) throw std::invalid_argument("tabular mdp: bad action row");
    for (const auto& outcomes : row) {
      double total = 0.0;
      for (const auto& [next, prob] : outcomes) {
        if (next < 0 || next >= num_states || prob < 0.0) throw std::invalid_argument("tabular mdp: bad outcome");
        total += prob;
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("tabular mdp: probabilities must sum to 1");
    }
  }
}

OracleResult discounted_success_oracle(const TabularMdp& mdp, const std::vector<int>& policy, double gamma,
                                       double tolerance, int max_iterations) {
  mdp.validate();
  if (static_cast<int>(policy.size()) != mdp.num_states) throw std::invalid_argument("oracle: policy size mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("oracle: gamma must lie in [0, 1)");

  OracleResult out;
  out.p = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  Eigen::MatrixXd next(mdp.num_states, mdp.num_actions);
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    for (int s = 0; s < mdp.num_states; ++s) {
      const double g = mdp.initial[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double expected = 0.0;
        for (const auto& [s2, prob] : mdp.transitions[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
          expected += prob * out.p(s2, policy[static_cast<std::size_t>(s2)]);
        }
        next(s, a) = (1.0 - gamma) * g + gamma * expected;
      }
    }
    const double change = (next - out.p).cwiseAbs().maxCoeff();
    out.p = next;
    // contraction: distance to the fixed point is at most change * gamma / (1 - gamma)
    if (change * gamma < tolerance * (1.0 - gamma)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double implied_step_budget(double gamma, double p_thresh) {
  if (!(p_thresh > 0.0 && p_thresh <= 1.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("implied_step_budget: need 0 < p_thresh <= 1 and 0 < gamma < 1");
  }
  return std::log(p_thresh) / std::log(gamma);
}

}  // namespace autoreset::agents
