#pragma once

// Reference forward pass (plain loops, no Eigen products) and central
// finite-difference gradients built on it. Shared by the unit tests and the
// acceptance gate as the independent oracle for backward().

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "autoreset/nn/mlp.hpp"
#include "autoreset/util/random.hpp"

namespace gradcheck {

using autoreset::nn::Activation;
using autoreset::nn::Matrix;
using autoreset::nn::MlpParams;
using autoreset::nn::MlpSpec;

inline double activate(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kLinear:
      return z;
  }
  return z;
}

struct ReferenceOutput {
  Matrix output;
  /// Smallest |pre-activation| over every relu unit and sample.
  double min_relu_margin = std::numeric_limits<double>::infinity();
};

inline ReferenceOutput reference_forward(const MlpParams& params, const Matrix& states, const Matrix* actions) {
  const MlpSpec& spec = params.spec();
  ReferenceOutput out;
  out.output.resize(spec.output_dim, states.cols());
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    std::vector<double> h(states.col(b).data(), states.col(b).data() + states.rows());
    for (int l = 0; l < spec.num_layers(); ++l) {
      if (spec.action_inject && spec.action_inject->layer_index == l) {
        for (Eigen::Index k = 0; k < actions->rows(); ++k) h.push_back((*actions)(k, b));
      }
      const auto& layer = params.layers()[static_cast<std::size_t>(l)];
      const bool last = l == spec.num_layers() - 1;
      const Activation act = last ? spec.output_activation : spec.hidden_activation;
      std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        double z = layer.bias(i);
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) z += layer.weight(i, j) * h[static_cast<std::size_t>(j)];
        if (act == Activation::kRelu) out.min_relu_margin = std::min(out.min_relu_margin, std::abs(z));
        next[static_cast<std::size_t>(i)] = activate(act, z);
      }
      h = std::move(next);
    }
    for (Eigen::Index i = 0; i < spec.output_dim; ++i) out.output(i, b) = h[static_cast<std::size_t>(i)];
  }
  return out;
}

/// L = sum(output .* output_grad) under the reference forward.
inline double objective(const MlpParams& params, const Matrix& states, const Matrix* actions, const Matrix& g) {
  return (reference_forward(params, states, actions).output.array() * g.array()).sum();
}

/// Relative error with a small floor so exact zeros compare sanely.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct NumericGradients {
  MlpParams params;
  Matrix state_grad;
  Matrix action_grad;
};

inline NumericGradients numeric_gradients(const MlpParams& params, const Matrix& states, const Matrix* actions,
                                          const Matrix& g, double h = 1e-5) {
  NumericGradients out;
  out.params = MlpParams::zeros(params.spec());
  MlpParams probe = params;
  auto& grad_layers = out.params.mutable_layers();
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    auto central = [&](double& slot) {
      const double saved = slot;
      slot = saved + h;
      probe.touch();
      const double plus = objective(probe, states, actions, g);
      slot = saved - h;
      probe.touch();
      const double minus = objective(probe, states, actions, g);
      slot = saved;
      probe.touch();
      return (plus - minus) / (2.0 * h);
    };
    auto& layer = probe.mutable_layers()[l];
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) grad_layers[l].weight(i, j) = central(layer.weight(i, j));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) grad_layers[l].bias(i) = central(layer.bias(i));
  }

  auto input_grad = [&](const Matrix& base, bool is_action) {
    Matrix grad(base.rows(), base.cols());
    Matrix x = base;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double saved = x(i, j);
        x(i, j) = saved + h;
        const double plus = is_action ? objective(params, states, &x, g) : objective(params, x, actions, g);
        x(i, j) = saved - h;
        const double minus = is_action ? objective(params, states, &x, g) : objective(params, x, actions, g);
        x(i, j) = saved;
        grad(i, j) = (plus - minus) / (2.0 * h);
      }
    }
    return grad;
  };
  out.state_grad = input_grad(states, false);
  if (actions) out.action_grad = input_grad(*actions, true);
  return out;
}

struct Comparison {
  double max_param_error = 0.0;
  double max_state_error = 0.0;
  double max_action_error = 0.0;
  double max_error() const { return std::max({max_param_error, max_state_error, max_action_error}); }
};

inline double max_matrix_error(const Matrix& a, const Matrix& n) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, relative_error(a(i, j), n(i, j)));
  }
  return worst;
}

inline Comparison compare(const autoreset::nn::Gradients& analytic, const NumericGradients& numeric) {
  Comparison c;
  for (std::size_t l = 0; l < numeric.params.layers().size(); ++l) {
    const auto& a = analytic.params.layers()[l];
    const auto& n = numeric.params.layers()[l];
    c.max_param_error = std::max({c.max_param_error, max_matrix_error(a.weight, n.weight),
                                  max_matrix_error(Matrix(a.bias), Matrix(n.bias))});
  }
  c.max_state_error = max_matrix_error(analytic.state_grad, numeric.state_grad);
  if (numeric.action_grad.size() > 0) c.max_action_error = max_matrix_error(analytic.action_grad, numeric.action_grad);
  return c;
}

/// One random gradient-check case: a random architecture (policy or critic
/// shaped), random weights of unit scale, random inputs kept away from relu
/// kinks so the central difference never straddles one.
struct Case {
  MlpParams params;
  Matrix states;
  Matrix actions;
  Matrix output_grad;
  bool has_action = false;
};

inline Case random_case(autoreset::Rng& rng) {
  MlpSpec spec;
  spec.input_dim = 1 + static_cast<int>(rng.index(6));
  spec.output_dim = 1 + static_cast<int>(rng.index(3));
  spec.hidden_dims.clear();
  const int depth = 1 + static_cast<int>(rng.index(3));
  for (int i = 0; i < depth; ++i) spec.hidden_dims.push_back(1 + static_cast<int>(rng.index(10)));
  spec.output_activation = rng.uniform() < 0.5 ? Activation::kTanh : Activation::kLinear;
  if (rng.uniform() < 0.5) spec.action_inject = autoreset::nn::ActionInject{1 + static_cast<int>(rng.index(3)), 1};

  Case c;
  c.has_action = spec.action_inject.has_value();
  const Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.index(4));
  c.params = autoreset::nn::init_params(spec, rng.next_u64());
  for (auto& layer : c.params.mutable_layers()) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = rng.normal() / std::sqrt(layer.weight.cols());
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * rng.normal();
  }
  c.output_grad.resize(spec.output_dim, batch);
  for (Eigen::Index i = 0; i < c.output_grad.size(); ++i) c.output_grad.data()[i] = rng.normal();
  for (;;) {
    c.states.resize(spec.input_dim, batch);
    for (Eigen::Index i = 0; i < c.states.size(); ++i) c.states.data()[i] = rng.normal();
    if (c.has_action) {
      c.actions.resize(spec.action_inject->action_dim, batch);
      for (Eigen::Index i = 0; i < c.actions.size(); ++i) c.actions.data()[i] = rng.uniform(-1.0, 1.0);
    }
    if (reference_forward(c.params, c.states, c.has_action ? &c.actions : nullptr).min_relu_margin > 1e-3) break;
  }
  return c;
}

}  // namespace gradcheck
