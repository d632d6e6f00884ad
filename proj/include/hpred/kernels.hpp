#pragma once

// Data-parallel batch kernels. Each kernel has a serial reference path and an
// OpenMP path; both write per-item results into indexed slots and reduce in
// index order, so their outputs are bitwise identical.

#include <cstdint>
#include <span>
#include <vector>

#include "hpred/cvae.hpp"
#include "hpred/irl.hpp"
#include "hpred/scene.hpp"

namespace hpred::kernels {

enum class Execution { Serial, Parallel };

/// Batch-mean ELBO and its gradient over normalized samples.
cvae::ElboGradient elbo_gradient(const cvae::CvaeModel& model,
                                 std::span<const cvae::CvaeSample> normalized_batch,
                                 std::span<const std::vector<double>> noise, double beta,
                                 Execution execution = Execution::Parallel);

/// Cumulative cost of every predicted trajectory against one ego plan.
std::vector<double> trajectory_costs(std::span<const Trajectory> predictions,
                                     const Trajectory& ego_plan, const Scene& scene,
                                     const irl::CostWeights& weights,
                                     const irl::FeatureConfig& features = {},
                                     Execution execution = Execution::Parallel);

/// 1 where the prediction collides with the ego plan at any common step.
/// Checking stops once either vehicle has left its mapped path.
std::vector<std::uint8_t> collision_flags(std::span<const Trajectory> predictions,
                                          const Trajectory& ego_plan, const Scene& scene,
                                          Execution execution = Execution::Parallel);

/// Number of OpenMP threads the parallel paths use (1 without OpenMP).
int thread_count();

}  // namespace hpred::kernels
