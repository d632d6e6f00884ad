#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hpred/cvae.hpp"
#include "hpred/irl.hpp"
#include "hpred/kernels.hpp"
#include "hpred/planner.hpp"
#include "hpred/scene.hpp"

namespace hpred::pipeline {

enum class SampleSource { Learned, Optimal };

struct SamplePair {
  Trajectory pred;
  Trajectory ego;
  SampleSource source = SampleSource::Learned;
};

struct WeightedSampleSet {
  std::vector<SamplePair> pairs;
  std::vector<double> weights;  ///< sums to 1
  std::vector<double> costs;    ///< cost of each pair's predicted trajectory
};

/// Odds between the learning-based (p_s) and planning-based (p_opt)
/// hypotheses.
struct RatioState {
  double p_s = 0.5;
  double p_opt = 0.5;

  double ratio() const { return p_s / p_opt; }
  static RatioState from_ratio(double r);
};

enum class Discrepancy { FinalState, FullTrajectoryRmse };

double discrepancy(const Trajectory& ego_sample, const Trajectory& ego_gt, Discrepancy mode);

/// Keeps pairs whose ego trajectory is within `threshold` of the ego plan,
/// in input order. Throws NoSatisfiedSamples when nothing survives.
std::vector<SamplePair> filter_satisfied(std::span<const SamplePair> samples,
                                         const Trajectory& ego_gt, double threshold,
                                         Discrepancy mode = Discrepancy::FinalState);

/// round-half-up(r * n_s)
std::size_t optimal_count(double ratio, std::size_t satisfied);

/// Appends optimal_count(r, N_s) copies of (xi_opt, ego_gt).
std::vector<SamplePair> inject_optimal(std::vector<SamplePair> satisfied, const Trajectory& xi_opt,
                                       const Trajectory& ego_gt, const RatioState& ratio);

/// softmax(-costs), computed with a max shift.
std::vector<double> softmax_weights(std::span<const double> costs);

/// weight_i proportional to exp(-C(theta, pred_i, ego_gt)).
WeightedSampleSet reweight(std::vector<SamplePair> pairs, const Scene& scene,
                           const irl::CostWeights& weights, const Trajectory& ego_gt,
                           const irl::FeatureConfig& features = {},
                           kernels::Execution execution = kernels::Execution::Parallel);

/// Systematic resampling indices for offset u in [0, 1).
std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t k,
                                            double u);

/// k predicted trajectories drawn by systematic resampling.
std::vector<Trajectory> resample(const WeightedSampleSet& set, std::size_t k, std::mt19937_64& rng);

/// Pointwise mean of the predicted trajectories.
Trajectory mean_prediction(std::span<const SamplePair> pairs);

/// Root mean squared (s, d) error between equal-length trajectories.
double trajectory_rmse(const Trajectory& a, const Trajectory& b);

/// Bayes update with likelihood exp(-RMSE^2 / (2 bandwidth^2)) per
/// hypothesis; p_opt is floored at 1e-6.
RatioState update_ratio(const RatioState& state, const Trajectory& observed,
                        const Trajectory& learned_pred, const Trajectory& optimal_pred,
                        double bandwidth);

struct PipelineConfig {
  std::size_t raw_samples = 100;
  std::size_t final_samples = 20;
  double threshold = 0.2;
  int threshold_doublings = 3;
  Discrepancy discrepancy = Discrepancy::FinalState;
  double bandwidth = 0.2;
  std::optional<double> forced_ratio;
  /// Forces r = 0. At r = 0 the satisfied set is resampled uniformly.
  bool pure_learned = false;
  planner::PlannerConfig planner;
  irl::FeatureConfig features;
};

struct Diagnostics {
  std::size_t n_raw = 0;
  std::size_t n_satisfied = 0;
  std::size_t n_optimal = 0;
  double ratio = 0.0;
  double threshold_used = 0.0;
  bool fallback = false;  ///< no satisfied samples even after widening
  double collision_rate = 0.0;
  double learned_only_collision_rate = 0.0;
  double min_cost = 0.0;
  double mean_cost = 0.0;
  double max_cost = 0.0;
  double optimal_cost = 0.0;
};

struct StepResult {
  std::vector<Trajectory> predictions;
  std::vector<Trajectory> learned_only;  ///< uniform resample of the satisfied set
  RatioState ratio;                      ///< state for the next step
  Diagnostics diagnostics;
  std::vector<SamplePair> raw;
  std::vector<SamplePair> satisfied;
  WeightedSampleSet weighted;
  Trajectory optimal;
  Trajectory ego_plan;
};

/// One prediction cycle: sample, condition on the ego plan, add optimal
/// samples, reweight, resample. When the scene carries a recorded pred
/// future and the ratio is not forced, the returned ratio is updated with
/// it as the next observation.
StepResult predict_step(const Scene& scene, const cvae::CvaeModel& model,
                        const irl::CostWeights& weights, const RatioState& ratio,
                        const PipelineConfig& config, std::mt19937_64& rng);

}  // namespace hpred::pipeline
