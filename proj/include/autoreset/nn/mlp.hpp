#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace autoreset::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh, kLinear };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Second input concatenated onto the output of hidden layer `layer_index`.
/// Only layer_index == 1 (the first hidden layer) is supported.
struct ActionInject {
  int action_dim = 1;
  int layer_index = 1;

  bool operator==(const ActionInject&) const = default;
};

/// Architecture of a dense feed-forward network.
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims{400, 300};
  int output_dim = 1;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kLinear;
  std::optional<ActionInject> action_inject;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }
  int layer_input_dim(int layer) const;
  int layer_output_dim(int layer) const;

  std::string describe() const;
  static MlpSpec parse(const std::string& text);

  bool operator==(const MlpSpec&) const = default;
};

/// Policy network: state -> tanh-bounded action.
MlpSpec policy_spec(int state_dim, int action_dim, std::vector<int> hidden);
/// Critic/classifier network: (state, action) -> scalar logit, action joins after hidden layer 1.
MlpSpec critic_spec(int state_dim, int action_dim, std::vector<int> hidden);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Weights of a network. Also used as the container for parameter gradients.
class MlpParams {
 public:
  MlpParams() = default;
  MlpParams(MlpSpec spec, std::vector<DenseLayer> layers);

  /// Zero-valued parameters with the shapes implied by `spec`.
  static MlpParams zeros(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Mutable access; invalidates outstanding forward caches.
  std::vector<DenseLayer>& mutable_layers() {
    touch();
    return layers_;
  }

  bool all_finite() const;
  double squared_norm() const;
  std::size_t parameter_count() const;

  /// Identifies one immutable snapshot of the values; changes on every mutation.
  std::uint64_t stamp() const { return stamp_; }
  void touch();

  bool same_values(const MlpParams& other) const;

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
  std::uint64_t stamp_ = 0;
};

/// Per-layer activations recorded by forward(); consumed by backward().
struct ForwardCache {
  MlpSpec spec;
  std::uint64_t params_stamp = 0;
  std::vector<Matrix> layer_inputs;  // input to each affine map (post concat)
  std::vector<Matrix> layer_outputs; // post-activation output of each layer
  Eigen::Index batch = 0;

  const Matrix& output() const { return layer_outputs.back(); }
};

struct Gradients {
  MlpParams params;     // summed over the batch
  Matrix state_grad;    // input_dim x batch
  Matrix action_grad;   // action_dim x batch (empty without action input)
};

struct AdamState {
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  std::int64_t step_count = 0;

  static AdamState for_params(const MlpParams& params);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Fan-in uniform init; final layer uniform in +-3e-3; biases zero.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

/// Batched forward pass. Columns of `states` (and `actions`) are samples.
ForwardCache forward(const MlpParams& params, const Matrix& states, const Matrix* actions = nullptr);

inline ForwardCache forward(const MlpParams& params, const Matrix& states, const Matrix& actions) {
  return forward(params, states, &actions);
}

/// Output only, no cache retained beyond the call.
Matrix evaluate(const MlpParams& params, const Matrix& states, const Matrix* actions = nullptr);

inline Matrix evaluate(const MlpParams& params, const Matrix& states, const Matrix& actions) {
  return evaluate(params, states, &actions);
}

Vector evaluate_one(const MlpParams& params, const Vector& state, const Vector* action = nullptr);

/// Exact reverse-mode gradients of sum(output .* output_grad).
/// Throws std::invalid_argument when the cache does not belong to `params`.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad,
                   bool want_param_grads = true);

/// ADAM descent step. Returns false (and leaves everything untouched) when a
/// gradient entry is non-finite.
bool adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr,
               const AdamConfig& config = {});

/// target <- tau * online + (1 - tau) * target.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

}  // namespace autoreset::nn
