#pragma once

// Glue between generated scenes, the two models and the evaluation metrics.

#include <cstdint>
#include <span>
#include <vector>

#include "hpred/cvae.hpp"
#include "hpred/irl.hpp"
#include "hpred/metrics.hpp"
#include "hpred/pipeline.hpp"
#include "hpred/planner.hpp"
#include "hpred/scenario.hpp"

namespace hpred::experiment {

/// (X, Y) pairs of scenes with recorded futures. Throws InvalidArgument when
/// a scene has none.
cvae::Dataset cvae_dataset(std::span<const Scene> scenes, const cvae::CvaeShape& shape);

/// IRL demonstrations of the predicted vehicle from the selected scenes.
std::vector<irl::Demonstration> demonstrations(std::span<const Scene> scenes,
                                               std::span<const std::size_t> indices);

/// Demonstrations produced by the planner under known weights: the
/// predicted vehicle's optimal response to each scene's recorded ego future.
/// Plans that did not converge or that touch a control bound are skipped,
/// since the Laplace likelihood assumes a stationary point. Stops after
/// `count` demonstrations; throws DatasetTooSmall if fewer are found.
std::vector<irl::Demonstration> planted_demonstrations(std::span<const Scene> scenes,
                                                       const irl::CostWeights& weights,
                                                       std::size_t count,
                                                       const planner::PlannerConfig& config);

/// Planner settings tight enough for planted demonstrations to be
/// stationary to finite-difference accuracy.
planner::PlannerConfig demonstration_planner();

struct RmseReport {
  metrics::HorizonRmse pred;
  metrics::HorizonRmse ego;
  metrics::HorizonRmse pred_constant_velocity;
};

/// Learned predictions (`samples` draws per scene) against recorded futures,
/// with the constant-velocity baseline alongside.
RmseReport evaluate_rmse(std::span<const Scene> scenes, const cvae::CvaeModel& model,
                         std::size_t samples, std::uint64_t seed,
                         metrics::SampleReduction reduction = metrics::SampleReduction::BestOfSamples);

inline constexpr double kDefaultSweepGrid[] = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};

struct SweepPoint {
  double ratio = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> rates;  ///< one per repeat
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

/// predict_step with the ratio forced to each value, `repeats` times. Repeat
/// j of every ratio uses seed base_seed + j.
SweepResult sweep_ratio(const Scene& scene, std::span<const double> ratios, std::size_t repeats,
                        const cvae::CvaeModel& model, const irl::CostWeights& weights,
                        const pipeline::PipelineConfig& config, std::uint64_t base_seed);

/// Spearman correlation of ratio against the mean rate per ratio.
double sweep_trend(const SweepResult& result);

}  // namespace hpred::experiment
