#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hpred/scene.hpp"

namespace hpred::irl {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{
    "proximity", "speed_gap", "accel", "lateral_dev"};

struct FeatureVector {
  double proximity = 0.0;    ///< exp(-(dist / sigma)^2)
  double speed_gap = 0.0;    ///< (v - v_limit)^2
  double accel = 0.0;        ///< a^2
  double lateral_dev = 0.0;  ///< d^2 w.r.t. the target lane

  std::array<double, kFeatureCount> values() const {
    return {proximity, speed_gap, accel, lateral_dev};
  }
  FeatureVector& operator+=(const FeatureVector& o);
};

struct CostWeights {
  std::array<double, kFeatureCount> theta{0.25, 0.25, 0.25, 0.25};

  double l1() const;
  /// Scaled to unit L1 norm. Throws InvalidArgument on a zero vector.
  CostWeights normalized() const;
  double dot(const FeatureVector& f) const;
};

/// Throws InvalidArgument unless every weight is finite and >= 0.
void validate(const CostWeights& w);

struct FeatureConfig {
  double proximity_sigma = 5.0;
};

/// Longitudinal kinematics of one step, from finite differences.
struct KinematicState {
  FrenetState state;
  double velocity = 0.0;
  double acceleration = 0.0;
};

FeatureVector features(const KinematicState& subject, const ReferencePath& subject_path,
                       const FrenetState& other, const ReferencePath& other_path,
                       double speed_limit, const FeatureConfig& config = {});

/// Everything the cost needs besides the two future trajectories: the
/// subject's last two history states seed the finite-difference velocity
/// and acceleration of the first future step.
struct CostContext {
  const ReferencePath* subject_path = nullptr;
  const ReferencePath* other_path = nullptr;
  FrenetState previous;
  FrenetState current;
  double dt = 0.2;
  double speed_limit = 8.0;
  FeatureConfig features;

  /// Cost of the predicted vehicle against the ego vehicle.
  static CostContext for_pred(const Scene& scene, const FeatureConfig& features = {});
  /// Roles swapped: cost of the ego vehicle against the predicted vehicle.
  static CostContext for_ego(const Scene& scene, const FeatureConfig& features = {});
};

/// Per-step features summed over the horizon.
FeatureVector feature_sums(std::span<const FrenetState> subject_future,
                           std::span<const FrenetState> other_future, const CostContext& ctx);

double cumulative_cost(const Trajectory& subject, const Trajectory& other, const CostContext& ctx,
                       const CostWeights& weights);
/// Cost of the scene's predicted vehicle.
double cumulative_cost(const Trajectory& xi_pred, const Trajectory& xi_ego, const Scene& scene,
                       const CostWeights& weights, const FeatureConfig& features = {});

/// Symmetrizes and adds eps*I, eps doubling from 1e-6, until the Cholesky
/// factorization succeeds. Throws SingularHessian past the cap.
struct RegularizedHessian {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> cholesky;
  double epsilon = 0.0;  ///< 0 when no shift was needed
};
RegularizedHessian regularize(const Eigen::MatrixXd& hessian);

struct CostDerivatives {
  Eigen::VectorXd gradient;  ///< over (s_1, d_1, ..., s_N, d_N)
  Eigen::MatrixXd hessian;   ///< regularized, positive definite
  double epsilon = 0.0;
};

inline constexpr double kDerivativeStep = 1e-4;

/// Central finite differences of the cost w.r.t. the flattened subject
/// trajectory.
CostDerivatives cost_gradient_hessian(const Trajectory& xi_pred, const Trajectory& xi_ego,
                                      const Scene& scene, const CostWeights& weights,
                                      const FeatureConfig& features = {},
                                      double step = kDerivativeStep);

/// Raw (unregularized) gradient and Hessian of one feature sum.
struct FeatureDerivatives {
  std::array<Eigen::VectorXd, kFeatureCount> gradient;
  std::array<Eigen::MatrixXd, kFeatureCount> hessian;
};
FeatureDerivatives feature_derivatives(const Trajectory& subject, const Trajectory& other,
                                       const CostContext& ctx, double step = kDerivativeStep);

/// -1/2 g^T H^-1 g + 1/2 log det H - D/2 log 2 pi, with H regularized first.
double laplace_log_likelihood(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian);

struct Demonstration {
  Trajectory pred_future;
  Trajectory ego_future;
  Scene context;
};

/// Demonstrations with their feature derivatives cached; the likelihood of
/// any weight vector is then a linear combination plus one factorization.
class PreparedDemonstrations {
 public:
  explicit PreparedDemonstrations(std::span<const Demonstration> demos,
                                  const FeatureConfig& features = {});

  std::size_t size() const { return derivatives_.size(); }
  double log_likelihood(const CostWeights& weights) const;
  /// Sum over demos of g^T H^-1 g (used by the scale line search).
  double quadratic_term(const CostWeights& weights) const;
  std::size_t dimension() const { return dimension_; }

 private:
  std::vector<FeatureDerivatives> derivatives_;
  std::size_t dimension_ = 0;
};

/// Laplace-approximated log-likelihood of the demonstration set.
double log_likelihood(std::span<const Demonstration> demos, const CostWeights& weights,
                      const FeatureConfig& features = {});

struct IrlConfig {
  std::size_t max_iterations = 2000;
  double gradient_tolerance = 1e-4;
  double weight_step = 1e-6;  ///< finite-difference step on theta
  double initial_step = 1.0;
  CostWeights initial{};
  FeatureConfig features;
};

struct IrlResult {
  CostWeights weights;  ///< normalized to unit L1 norm
  double scale = 1.0;   ///< L1 norm of the maximum-likelihood theta before normalization
  std::vector<double> likelihood_curve;  ///< mean per-demo log-likelihood per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr std::size_t kMinDemonstrations = 5;

/// Projected gradient ascent on the (per-demo mean) log-likelihood over
/// theta >= 0 with Armijo backtracking, each step followed by an exact
/// search along the scale ray.
IrlResult train_irl(std::span<const Demonstration> demos, const IrlConfig& config = {});

nlohmann::json to_json(const CostWeights& w);
CostWeights weights_from_json(const nlohmann::json& j);

double cosine_similarity(const CostWeights& a, const CostWeights& b);

}  // namespace hpred::irl
