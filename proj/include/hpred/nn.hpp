#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

namespace hpred::nn {

struct NetworkGradient {
  std::vector<double> parameters;
  std::vector<double> input;
};

/// Fully connected network: tanh on hidden layers, identity on the output.
/// Parameters are stored flat, per layer: row-major weights (out x in) then
/// biases.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// All parameters zero.
  explicit DenseNetwork(std::vector<std::size_t> layer_sizes);

  /// Weights uniform in +-sqrt(6 / (n_in + n_out)), biases zero.
  static DenseNetwork glorot(std::vector<std::size_t> layer_sizes, std::mt19937_64& rng);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  std::vector<double> forward(std::span<const double> input) const;

  /// Exact gradient of upstream . forward(input).
  NetworkGradient gradient(std::span<const double> input, std::span<const double> upstream) const;

  /// Adds the parameter gradient into `param_grad` and overwrites `input_grad`.
  void accumulate_gradient(std::span<const double> input, std::span<const double> upstream,
                           std::span<double> param_grad, std::span<double> input_grad) const;

  friend bool operator==(const DenseNetwork&, const DenseNetwork&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

std::size_t parameter_count_for(std::span<const std::size_t> layer_sizes);

/// Adam moment estimates plus hyperparameters.
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_parameters(std::size_t count, double learning_rate);
};

/// One bias-corrected Adam step, in place.
void apply_update(OptimizerState& state, std::span<double> parameters,
                  std::span<const double> gradient);

nlohmann::json to_json(const DenseNetwork& net);
DenseNetwork network_from_json(const nlohmann::json& j);

}  // namespace hpred::nn
