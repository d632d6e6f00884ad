#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hpred/scene.hpp"

namespace hpred::metrics {

/// Fraction of predictions that collide with the ego plan.
double collision_rate(std::span<const Trajectory> predictions, const Trajectory& ego_plan,
                      const Scene& scene);

enum class SampleReduction {
  BestOfSamples,  ///< sample with the lowest mean displacement per scene
  MeanOverSamples,
};

struct HorizonRmse {
  std::vector<double> rmse;  ///< per future step, over scenes
  std::vector<double> std;   ///< spread of the per-scene step errors
};

/// Per-step position error in (s, d) of each scene's predictions against its
/// ground truth. Throws LengthMismatch on ragged input.
HorizonRmse rmse_per_horizon(std::span<const std::vector<Trajectory>> predictions,
                             std::span<const Trajectory> ground_truth,
                             SampleReduction reduction = SampleReduction::BestOfSamples);

/// Average ranks (ties share their mean rank), 1-based.
std::vector<double> ranks(std::span<const double> values);

/// Spearman rank correlation. Throws InvalidArgument for fewer than 2 points
/// or a constant series.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace hpred::metrics
