#include "hpred/nn.hpp"

#include <algorithm>
#include <cmath>

#include "hpred/error.hpp"

namespace hpred::nn {

std::size_t parameter_count_for(std::span<const std::size_t> layer_sizes) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return total;
}

DenseNetwork::DenseNetwork(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || std::any_of(sizes_.begin(), sizes_.end(), [](std::size_t n) { return n == 0; })) {
    throw Error(ErrorCode::ShapeMismatch, "network needs >= 2 positive layer sizes");
  }
  params_.assign(parameter_count_for(sizes_), 0.0);
}

DenseNetwork DenseNetwork::glorot(std::vector<std::size_t> layer_sizes, std::mt19937_64& rng) {
  DenseNetwork net(std::move(layer_sizes));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    const std::size_t n_in = net.sizes_[l];
    const std::size_t n_out = net.sizes_[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < n_in * n_out; ++k) net.params_[offset + k] = dist(rng);
    offset += n_in * n_out + n_out;
  }
  return net;
}

std::vector<double> DenseNetwork::forward(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "forward: expected input of " +
                                              std::to_string(input_size()) + ", got " +
                                              std::to_string(input.size()));
  }
  std::vector<double> act(input.begin(), input.end());
  std::vector<double> next;
  std::size_t offset = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + n_in * n_out;
    next.assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = b[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) z += row[i] * act[i];
      next[o] = l + 1 < layers ? std::tanh(z) : z;
    }
    act.swap(next);
    offset += n_in * n_out + n_out;
  }
  return act;
}

void DenseNetwork::accumulate_gradient(std::span<const double> input,
                                       std::span<const double> upstream,
                                       std::span<double> param_grad,
                                       std::span<double> input_grad) const {
  if (input.size() != input_size() || upstream.size() != output_size() ||
      param_grad.size() != params_.size() || input_grad.size() != input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient: inconsistent shapes");
  }
  const std::size_t layers = sizes_.size() - 1;
  // Activations per layer boundary, including the input.
  std::vector<std::vector<double>> acts(layers + 1);
  std::vector<std::size_t> offsets(layers);
  acts[0].assign(input.begin(), input.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + n_in * n_out;
    acts[l + 1].assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = b[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) z += row[i] * acts[l][i];
      acts[l + 1][o] = l + 1 < layers ? std::tanh(z) : z;
    }
    offset += n_in * n_out + n_out;
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> below;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t n_in = sizes_[l];
    const std::size_t n_out = sizes_[l + 1];
    if (l + 1 < layers) {
      for (std::size_t o = 0; o < n_out; ++o) {
        const double a = acts[l + 1][o];
        delta[o] *= 1.0 - a * a;
      }
    }
    const double* w = params_.data() + offsets[l];
    double* gw = param_grad.data() + offsets[l];
    double* gb = gw + n_in * n_out;
    below.assign(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double g = delta[o];
      gb[o] += g;
      const double* row = w + o * n_in;
      double* grow = gw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) {
        grow[i] += g * acts[l][i];
        below[i] += g * row[i];
      }
    }
    delta.swap(below);
  }
  std::copy(delta.begin(), delta.end(), input_grad.begin());
}

NetworkGradient DenseNetwork::gradient(std::span<const double> input,
                                       std::span<const double> upstream) const {
  NetworkGradient g;
  g.parameters.assign(params_.size(), 0.0);
  g.input.assign(input_size(), 0.0);
  if (input.size() != input_size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient: input size mismatch");
  }
  accumulate_gradient(input, upstream, g.parameters, g.input);
  return g;
}

OptimizerState OptimizerState::for_parameters(std::size_t count, double learning_rate) {
  OptimizerState s;
  s.first_moment.assign(count, 0.0);
  s.second_moment.assign(count, 0.0);
  s.learning_rate = learning_rate;
  return s;
}

void apply_update(OptimizerState& state, std::span<double> parameters,
                  std::span<const double> gradient) {
  if (parameters.size() != gradient.size() || state.first_moment.size() != parameters.size() ||
      state.second_moment.size() != parameters.size()) {
    throw Error(ErrorCode::ShapeMismatch, "apply_update: shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const double g = gradient[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / c1;
    const double v_hat = state.second_moment[i] / c2;
    parameters[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

nlohmann::json to_json(const DenseNetwork& net) {
  return nlohmann::json{{"layer_sizes", net.layer_sizes()},
                        {"hidden_activation", "tanh"},
                        {"output_activation", "identity"},
                        {"parameters", std::vector<double>(net.parameters().begin(), net.parameters().end())}};
}

DenseNetwork network_from_json(const nlohmann::json& j) {
  try {
    DenseNetwork net(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (params.size() != net.parameter_count()) {
      throw Error(ErrorCode::SchemaError, "network parameter count does not match layer sizes");
    }
    std::copy(params.begin(), params.end(), net.parameters().begin());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("network json: ") + e.what());
  }
}

}  // namespace hpred::nn
