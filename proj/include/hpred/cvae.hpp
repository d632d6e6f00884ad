#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpred/nn.hpp"
#include "hpred/scene.hpp"

namespace hpred::cvae {

/// Fixed sizes of the history/future encodings and of both networks.
struct CvaeShape {
  std::size_t history_states = 6;  ///< past steps plus the current one
  std::size_t future_states = 5;
  std::size_t surround_slots = 2;
  std::size_t latent = 8;
  std::vector<std::size_t> hidden{64, 64};
  double dt = 0.2;

  /// (s, d) of pred and ego per history state, then per surround slot the
  /// (s, d) history plus a presence flag.
  std::size_t x_size() const { return 4 * history_states + surround_slots * (2 * history_states + 1); }
  /// Pred future (s, d) then ego future (s, d).
  std::size_t y_size() const { return 4 * future_states; }

  friend bool operator==(const CvaeShape&, const CvaeShape&) = default;
};

/// Flat history vector X. Surrounding vehicles fill slots nearest the cross
/// point first; empty slots repeat the ego's current state with flag 0.
std::vector<double> encode_history(const Scene& scene, const CvaeShape& shape);

/// Flat future vector Y.
std::vector<double> encode_future(const Trajectory& pred_future, const Trajectory& ego_future,
                                  const CvaeShape& shape);

struct JointSample {
  Trajectory pred;
  Trajectory ego;
};

JointSample decode_future(std::span<const double> y, const CvaeShape& shape,
                          const std::string& pred_path_id = {},
                          const std::string& ego_path_id = {});

/// Per-coordinate affine normalization fitted on training data.
struct Normalization {
  std::vector<double> x_mean, x_scale, y_mean, y_scale;

  static Normalization identity(const CvaeShape& shape);
  std::vector<double> normalize_x(std::span<const double> x) const;
  std::vector<double> normalize_y(std::span<const double> y) const;
  std::vector<double> denormalize_y(std::span<const double> y) const;
};

struct CvaeSample {
  std::vector<double> x;
  std::vector<double> y;
};
using Dataset = std::vector<CvaeSample>;

Normalization fit_normalization(const Dataset& data, const CvaeShape& shape);

/// Encoder maps normalized X||Y to (mu, logvar); decoder maps normalized
/// X||z to normalized Y.
struct CvaeModel {
  CvaeShape shape;
  nn::DenseNetwork encoder;
  nn::DenseNetwork decoder;
  Normalization normalization;

  /// Glorot-initialized networks with identity normalization.
  static CvaeModel initialize(const CvaeShape& shape, std::mt19937_64& rng);
  /// Zero-weight networks with identity normalization.
  static CvaeModel zeros(const CvaeShape& shape);

  std::size_t latent() const { return shape.latent; }
};

struct LatentGaussian {
  std::vector<double> mu;
  std::vector<double> logvar;
};

LatentGaussian encode(const CvaeModel& model, std::span<const double> x, std::span<const double> y);

/// z = mu + exp(logvar / 2) * noise.
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> logvar,
                                   std::span<const double> noise);

/// Decoded future in raw (de-normalized) Frenet coordinates.
std::vector<double> decode(const CvaeModel& model, std::span<const double> x,
                           std::span<const double> z);

/// KL(N(mu, exp(logvar)) || N(0, I)).
double kl_divergence(std::span<const double> mu, std::span<const double> logvar);

/// Mean over the batch of ||Yn - decode_n(Xn, z)||^2 + beta * KL, computed
/// in normalized coordinates. `noise` holds one standard-normal vector per
/// sample.
double elbo_loss(const CvaeModel& model, std::span<const CvaeSample> batch,
                 std::span<const std::vector<double>> noise, double beta);

/// Loss and gradient of one already-normalized sample; gradients are added
/// into the two spans.
double accumulate_sample_gradient(const CvaeModel& model, std::span<const double> xn,
                                  std::span<const double> yn, std::span<const double> noise,
                                  double beta, std::span<double> encoder_grad,
                                  std::span<double> decoder_grad);

struct ElboGradient {
  double loss = 0.0;
  std::vector<double> encoder;
  std::vector<double> decoder;
};

struct TrainingConfig {
  double beta = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

struct TrainingResult {
  CvaeModel model;
  std::vector<double> epoch_losses;  ///< mean minibatch loss per epoch
};

/// Minimum training-set size accepted by train().
inline constexpr std::size_t kMinTrainingSamples = 10;

TrainingResult train(const Dataset& data, const TrainingConfig& config, const CvaeShape& shape);

/// Decodes one joint sample per noise vector.
std::vector<JointSample> decode_noise(const CvaeModel& model, std::span<const double> x,
                                      std::span<const std::vector<double>> noise,
                                      const std::string& pred_path_id = {},
                                      const std::string& ego_path_id = {});

/// n joint samples with independent z ~ N(0, I).
std::vector<JointSample> sample_joint(const CvaeModel& model, std::span<const double> x,
                                      std::size_t n, std::mt19937_64& rng,
                                      const std::string& pred_path_id = {},
                                      const std::string& ego_path_id = {});

std::vector<std::vector<double>> standard_normal_batch(std::size_t count, std::size_t dim,
                                                       std::mt19937_64& rng);

nlohmann::json to_json(const CvaeModel& model);
CvaeModel model_from_json(const nlohmann::json& j);

}  // namespace hpred::cvae
