#include "autoreset/nn/mlp.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "autoreset/util/random.hpp"

namespace autoreset::nn {

namespace {

std::atomic<std::uint64_t> g_next_stamp{1};

constexpr double kFinalLayerInitBound = 3e-3;

void apply_activation(Activation act, Matrix& z) {
  switch (act) {
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::kLinear:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative expressed via the output y.
void apply_activation_derivative(Activation act, const Matrix& y, Matrix& grad) {
  switch (act) {
    case Activation::kRelu:
      grad = (y.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kTanh:
      grad.array() *= (1.0 - y.array().square());
      break;
    case Activation::kLinear:
      break;
  }
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kLinear:
      return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("mlp spec: input_dim must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("mlp spec: output_dim must be >= 1");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("mlp spec: hidden dims must be >= 1");
  }
  if (hidden_activation != Activation::kRelu) {
    throw std::invalid_argument("mlp spec: hidden activation must be relu");
  }
  if (output_activation == Activation::kRelu) {
    throw std::invalid_argument("mlp spec: output activation must be tanh or linear");
  }
  if (action_inject) {
    if (action_inject->action_dim < 1) {
      throw std::invalid_argument("mlp spec: action_dim must be >= 1");
    }
    if (action_inject->layer_index != 1) {
      throw std::invalid_argument("mlp spec: action may only join after the first hidden layer");
    }
    if (hidden_dims.empty()) {
      throw std::invalid_argument("mlp spec: action injection needs a hidden layer");
    }
  }
}

int MlpSpec::layer_input_dim(int layer) const {
  if (layer == 0) return input_dim;
  int dim = hidden_dims[static_cast<std::size_t>(layer - 1)];
  if (action_inject && action_inject->layer_index == layer) dim += action_inject->action_dim;
  return dim;
}

int MlpSpec::layer_output_dim(int layer) const {
  if (layer == num_layers() - 1) return output_dim;
  return hidden_dims[static_cast<std::size_t>(layer)];
}

std::string MlpSpec::describe() const {
  std::ostringstream os;
  os << "in=" << input_dim << " hidden=";
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    if (i) os << ',';
    os << hidden_dims[i];
  }
  if (hidden_dims.empty()) os << '-';
  os << " out=" << output_dim << " hidden_act=" << to_string(hidden_activation)
     << " out_act=" << to_string(output_activation) << " inject=";
  if (action_inject) {
    os << action_inject->action_dim << '@' << action_inject->layer_index;
  } else {
    os << "none";
  }
  return os.str();
}

MlpSpec MlpSpec::parse(const std::string& text) {
  MlpSpec spec;
  spec.hidden_dims.clear();
  std::istringstream is(text);
  std::string token;
  int seen = 0;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("mlp spec: malformed token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "in") {
      spec.input_dim = std::stoi(value);
    } else if (key == "hidden") {
      if (value != "-") spec.hidden_dims = parse_int_list(value);
    } else if (key == "out") {
      spec.output_dim = std::stoi(value);
    } else if (key == "hidden_act") {
      spec.hidden_activation = activation_from_string(value);
    } else if (key == "out_act") {
      spec.output_activation = activation_from_string(value);
    } else if (key == "inject") {
      if (value != "none") {
        const auto at = value.find('@');
        if (at == std::string::npos) throw std::invalid_argument("mlp spec: malformed inject");
        spec.action_inject = ActionInject{std::stoi(value.substr(0, at)), std::stoi(value.substr(at + 1))};
      }
    } else {
      throw std::invalid_argument("mlp spec: unknown field '" + key + "'");
    }
    ++seen;
  }
  if (seen != 6) throw std::invalid_argument("mlp spec: expected 6 fields");
  spec.validate();
  return spec;
}

MlpSpec policy_spec(int state_dim, int action_dim, std::vector<int> hidden) {
  MlpSpec spec;
  spec.input_dim = state_dim;
  spec.hidden_dims = std::move(hidden);
  spec.output_dim = action_dim;
  spec.output_activation = Activation::kTanh;
  spec.validate();
  return spec;
}

MlpSpec critic_spec(int state_dim, int action_dim, std::vector<int> hidden) {
  MlpSpec spec;
  spec.input_dim = state_dim;
  spec.hidden_dims = std::move(hidden);
  spec.output_dim = 1;
  spec.output_activation = Activation::kLinear;
  spec.action_inject = ActionInject{action_dim, 1};
  spec.validate();
  return spec;
}

MlpParams::MlpParams(MlpSpec spec, std::vector<DenseLayer> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  spec_.validate();
  if (static_cast<int>(layers_.size()) != spec_.num_layers()) {
    throw std::invalid_argument("mlp params: layer count does not match spec");
  }
  for (int l = 0; l < spec_.num_layers(); ++l) {
    const auto& layer = layers_[static_cast<std::size_t>(l)];
    if (layer.weight.rows() != spec_.layer_output_dim(l) || layer.weight.cols() != spec_.layer_input_dim(l) ||
        layer.bias.size() != spec_.layer_output_dim(l)) {
      throw std::invalid_argument("mlp params: layer " + std::to_string(l) + " shape does not match spec");
    }
  }
  touch();
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  spec.validate();
  std::vector<DenseLayer> layers;
  for (int l = 0; l < spec.num_layers(); ++l) {
    layers.push_back({Matrix::Zero(spec.layer_output_dim(l), spec.layer_input_dim(l)),
                      Vector::Zero(spec.layer_output_dim(l))});
  }
  return MlpParams(spec, std::move(layers));
}

bool MlpParams::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

double MlpParams::squared_norm() const {
  double total = 0.0;
  for (const auto& layer : layers_) total += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return total;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

void MlpParams::touch() { stamp_ = g_next_stamp.fetch_add(1, std::memory_order_relaxed); }

bool MlpParams::same_values(const MlpParams& other) const {
  if (!(spec_ == other.spec_)) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias) return false;
  }
  return true;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState state;
  for (const auto& layer : params.layers()) {
    state.first_moment.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                                  Vector::Zero(layer.bias.size())});
    state.second_moment.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                                   Vector::Zero(layer.bias.size())});
  }
  return state;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  const int last = spec.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    const int rows = spec.layer_output_dim(l);
    const int cols = spec.layer_input_dim(l);
    const double bound = l == last ? kFinalLayerInitBound : 1.0 / std::sqrt(static_cast<double>(cols));
    DenseLayer layer{Matrix(rows, cols), Vector::Zero(rows)};
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
    }
    layers.push_back(std::move(layer));
  }
  return MlpParams(spec, std::move(layers));
}


ForwardCache forward(const MlpParams& params, const Matrix& states, const Matrix* actions) {
  const MlpSpec& spec = params.spec();
  if (states.rows() != spec.input_dim) {
    throw std::invalid_argument("mlp forward: state dim " + std::to_string(states.rows()) + " != " +
                                std::to_string(spec.input_dim));
  }
  if (static_cast<bool>(actions) != spec.action_inject.has_value()) {
    throw std::invalid_argument("mlp forward: action input must be given iff the spec injects one");
  }
  if (actions) {
    if (actions->rows() != spec.action_inject->action_dim || actions->cols() != states.cols()) {
      throw std::invalid_argument("mlp forward: action shape mismatch");
    }
  }

  ForwardCache cache;
  cache.spec = spec;
  cache.params_stamp = params.stamp();
  cache.batch = states.cols();
  const int n_layers = spec.num_layers();
  cache.layer_inputs.reserve(static_cast<std::size_t>(n_layers));
  cache.layer_outputs.reserve(static_cast<std::size_t>(n_layers));

  for (int l = 0; l < n_layers; ++l) {
    if (l == 0) {
      cache.layer_inputs.push_back(states);
    } else if (spec.action_inject && spec.action_inject->layer_index == l) {
      const Matrix& h = cache.layer_outputs.back();
      Matrix joined(h.rows() + actions->rows(), h.cols());
      joined.topRows(h.rows()) = h;
      joined.bottomRows(actions->rows()) = *actions;
      cache.layer_inputs.push_back(std::move(joined));
    } else {
      cache.layer_inputs.push_back(cache.layer_outputs.back());
    }
    const DenseLayer& layer = params.layers()[static_cast<std::size_t>(l)];
    Matrix z = layer.weight * cache.layer_inputs.back();
    z.colwise() += layer.bias;
    apply_activation(l == n_layers - 1 ? spec.output_activation : spec.hidden_activation, z);
    cache.layer_outputs.push_back(std::move(z));
  }
  return cache;
}

Matrix evaluate(const MlpParams& params, const Matrix& states, const Matrix* actions) {
  return forward(params, states, actions).layer_outputs.back();
}

Vector evaluate_one(const MlpParams& params, const Vector& state, const Vector* action) {
  Matrix s = state;
  if (action) {
    Matrix a = *action;
    return evaluate(params, s, &a).col(0);
  }
  return evaluate(params, s, nullptr).col(0);
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad,
                   bool want_param_grads) {
  const MlpSpec& spec = params.spec();
  if (!(cache.spec == spec) || cache.params_stamp != params.stamp()) {
    throw std::invalid_argument("mlp backward: cache does not belong to these parameters");
  }
  if (output_grad.rows() != spec.output_dim || output_grad.cols() != cache.batch) {
    throw std::invalid_argument("mlp backward: output_grad shape mismatch");
  }

  Gradients grads;
  const int n_layers = spec.num_layers();
  std::vector<DenseLayer> layer_grads(static_cast<std::size_t>(want_param_grads ? n_layers : 0));

  Matrix delta = output_grad;
  apply_activation_derivative(spec.output_activation, cache.layer_outputs.back(), delta);

  for (int l = n_layers - 1; l >= 0; --l) {
    const auto idx = static_cast<std::size_t>(l);
    const DenseLayer& layer = params.layers()[idx];
    if (want_param_grads) {
      layer_grads[idx].weight.noalias() = delta * cache.layer_inputs[idx].transpose();
      layer_grads[idx].bias = delta.rowwise().sum();
    }
    Matrix input_grad = layer.weight.transpose() * delta;
    if (l == 0) {
      grads.state_grad = std::move(input_grad);
      break;
    }
    const Matrix& prev_out = cache.layer_outputs[idx - 1];
    if (spec.action_inject && spec.action_inject->layer_index == l) {
      grads.action_grad = input_grad.bottomRows(spec.action_inject->action_dim);
      delta = input_grad.topRows(prev_out.rows());
    } else {
      delta = std::move(input_grad);
    }
    apply_activation_derivative(spec.hidden_activation, prev_out, delta);
  }

  if (want_param_grads) {
    grads.params = MlpParams(spec, std::move(layer_grads));
  }
  return grads;
}

bool adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, const AdamConfig& config) {
  if (!(params.spec() == grads.spec())) throw std::invalid_argument("adam: gradient spec mismatch");
  if (state.first_moment.size() != params.layers().size()) {
    throw std::invalid_argument("adam: optimizer state shape mismatch");
  }
  if (!grads.all_finite()) return false;

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  const double step = lr / bias1;
  const double denom_scale = 1.0 / std::sqrt(bias2);

  auto& layers = params.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto update = [&](auto& value, auto& m, auto& v, const auto& g) {
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
      value.array() -= step * m.array() / (v.array().sqrt() * denom_scale + config.epsilon);
    };
    update(layers[i].weight, state.first_moment[i].weight, state.second_moment[i].weight,
           grads.layers()[i].weight);
    update(layers[i].bias, state.first_moment[i].bias, state.second_moment[i].bias, grads.layers()[i].bias);
  }
  return true;
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (!(target.spec() == online.spec())) throw std::invalid_argument("soft_update: spec mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  auto& layers = target.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight = tau * online.layers()[i].weight + (1.0 - tau) * layers[i].weight;
    layers[i].bias = tau * online.layers()[i].bias + (1.0 - tau) * layers[i].bias;
  }
}

}  // namespace autoreset::nn
