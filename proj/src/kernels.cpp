#include "hpred/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hpred/error.hpp"

namespace hpred::kernels {

namespace {

// Runs body(i) for i in [0, n). Exceptions inside the parallel region are
// captured and rethrown (lowest index first) after it ends.
template <typename Body>
void for_each_index(std::size_t n, Execution execution, Body&& body) {
  if (execution == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

cvae::ElboGradient elbo_gradient(const cvae::CvaeModel& model,
                                 std::span<const cvae::CvaeSample> normalized_batch,
                                 std::span<const std::vector<double>> noise, double beta,
                                 Execution execution) {
  const std::size_t n = normalized_batch.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty ELBO batch");
  if (noise.size() != n) throw Error(ErrorCode::ShapeMismatch, "one noise vector per sample");
  const std::size_t pe = model.encoder.parameter_count();
  const std::size_t pd = model.decoder.parameter_count();

  std::vector<double> losses(n);
  std::vector<std::vector<double>> enc(n), dec(n);
  for_each_index(n, execution, [&](std::size_t i) {
    enc[i].assign(pe, 0.0);
    dec[i].assign(pd, 0.0);
    losses[i] = cvae::accumulate_sample_gradient(model, normalized_batch[i].x,
                                                 normalized_batch[i].y, noise[i], beta, enc[i],
                                                 dec[i]);
  });

  cvae::ElboGradient out;
  out.encoder.assign(pe, 0.0);
  out.decoder.assign(pd, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.loss += losses[i];
    for (std::size_t k = 0; k < pe; ++k) out.encoder[k] += enc[i][k];
    for (std::size_t k = 0; k < pd; ++k) out.decoder[k] += dec[i][k];
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (double& g : out.encoder) g *= inv;
  for (double& g : out.decoder) g *= inv;
  return out;
}

std::vector<double> trajectory_costs(std::span<const Trajectory> predictions,
                                     const Trajectory& ego_plan, const Scene& scene,
                                     const irl::CostWeights& weights,
                                     const irl::FeatureConfig& features, Execution execution) {
  const auto ctx = irl::CostContext::for_pred(scene, features);
  std::vector<double> out(predictions.size());
  for_each_index(predictions.size(), execution, [&](std::size_t i) {
    out[i] = irl::cumulative_cost(predictions[i], ego_plan, ctx, weights);
  });
  return out;
}

std::vector<std::uint8_t> collision_flags(std::span<const Trajectory> predictions,
                                          const Trajectory& ego_plan, const Scene& scene,
                                          Execution execution) {
  const auto& pp = scene.pred_path();
  const auto& ep = scene.ego_path();
  std::vector<std::uint8_t> out(predictions.size(), 0);
  for_each_index(predictions.size(), execution, [&](std::size_t i) {
    const auto& pred = predictions[i];
    const std::size_t steps = std::min(pred.size(), ego_plan.size());
    for (std::size_t t = 0; t < steps; ++t) {
      if (!on_path(pred.states[t], pp) || !on_path(ego_plan.states[t], ep)) break;
      if (collision(pred.states[t], pp, ego_plan.states[t], ep, scene.pred_footprint,
                    scene.ego_footprint)) {
        out[i] = 1;
        break;
      }
    }
  });
  return out;
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hpred::kernels
