#include "hpred/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hpred/error.hpp"

namespace hpred::experiment {

cvae::Dataset cvae_dataset(std::span<const Scene> scenes, const cvae::CvaeShape& shape) {
  cvae::Dataset out;
  out.reserve(scenes.size());
  for (const auto& scene : scenes) {
    if (!scene.pred_future || !scene.ego_future) {
      throw Error(ErrorCode::InvalidArgument, "scene '" + scene.id + "' has no recorded futures");
    }
    out.push_back({cvae::encode_history(scene, shape),
                   cvae::encode_future(*scene.pred_future, *scene.ego_future, shape)});
  }
  return out;
}

std::vector<irl::Demonstration> demonstrations(std::span<const Scene> scenes,
                                               std::span<const std::size_t> indices) {
  std::vector<irl::Demonstration> out;
  for (std::size_t i : indices) {
    if (i >= scenes.size()) throw Error(ErrorCode::InvalidArgument, "demonstration index out of range");
    const auto& scene = scenes[i];
    if (!scene.pred_future || !scene.ego_future) {
      throw Error(ErrorCode::InvalidArgument, "scene '" + scene.id + "' has no recorded futures");
    }
    out.push_back({*scene.pred_future, *scene.ego_future, scene});
  }
  return out;
}

std::vector<irl::Demonstration> planted_demonstrations(std::span<const Scene> scenes,
                                                       const irl::CostWeights& weights,
                                                       std::size_t count,
                                                       const planner::PlannerConfig& config) {
  std::vector<irl::Demonstration> out;
  const double a_edge = 0.9975 * config.bounds.max_accel;
  const double d_edge = 0.995 * config.bounds.max_lateral_rate;
  for (const auto& scene : scenes) {
    if (out.size() >= count) break;
    if (!scene.ego_future) continue;
    const auto plan = planner::optimize_trajectory(scene, weights, *scene.ego_future, config);
    if (!plan.converged) continue;
    const auto& c = plan.controls;
    const bool bound = std::any_of(c.accel.begin(), c.accel.end(),
                                   [&](double a) { return std::abs(a) > a_edge; }) ||
                       std::any_of(c.lateral_rate.begin(), c.lateral_rate.end(),
                                   [&](double r) { return std::abs(r) > d_edge; });
    if (bound) continue;
    out.push_back({plan.trajectory, *scene.ego_future, scene});
  }
  if (out.size() < count) {
    throw Error(ErrorCode::DatasetTooSmall, "only " + std::to_string(out.size()) +
                                                " interior demonstrations found");
  }
  return out;
}

planner::PlannerConfig demonstration_planner() {
  planner::PlannerConfig c;
  c.gradient_tolerance = 1e-7;
  c.max_iterations = 2000;
  c.fd_step = 1e-5;
  return c;
}

RmseReport evaluate_rmse(std::span<const Scene> scenes, const cvae::CvaeModel& model,
                         std::size_t samples, std::uint64_t seed,
                         metrics::SampleReduction reduction) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Trajectory>> pred, ego, cv;
  std::vector<Trajectory> pred_gt, ego_gt;
  for (const auto& scene : scenes) {
    if (!scene.pred_future || !scene.ego_future) {
      throw Error(ErrorCode::InvalidArgument, "scene '" + scene.id + "' has no recorded futures");
    }
    const auto x = cvae::encode_history(scene, model.shape);
    auto draws = cvae::sample_joint(model, x, samples, rng, scene.pred_history.path_id,
                                    scene.ego_history.path_id);
    auto& p = pred.emplace_back();
    auto& e = ego.emplace_back();
    for (auto& d : draws) {
      p.push_back(std::move(d.pred));
      e.push_back(std::move(d.ego));
    }
    cv.push_back({constant_velocity_future(scene.pred_history, model.shape.future_states)});
    pred_gt.push_back(*scene.pred_future);
    ego_gt.push_back(*scene.ego_future);
  }
  return {metrics::rmse_per_horizon(pred, pred_gt, reduction),
          metrics::rmse_per_horizon(ego, ego_gt, reduction),
          metrics::rmse_per_horizon(cv, pred_gt, reduction)};
}

SweepResult sweep_ratio(const Scene& scene, std::span<const double> ratios, std::size_t repeats,
                        const cvae::CvaeModel& model, const irl::CostWeights& weights,
                        const pipeline::PipelineConfig& config, std::uint64_t base_seed) {
  if (repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  SweepResult out;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ratios must be >= 0");
    if (i > 0 && !(ratios[i] > ratios[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "ratios must be strictly increasing");
    }
    SweepPoint point;
    point.ratio = ratios[i];
    auto cfg = config;
    cfg.forced_ratio = ratios[i];
    for (std::size_t j = 0; j < repeats; ++j) {
      std::mt19937_64 rng(base_seed + j);
      const auto step = pipeline::predict_step(scene, model, weights, {}, cfg, rng);
      point.rates.push_back(step.diagnostics.collision_rate);
    }
    const double n = static_cast<double>(repeats);
    point.mean = std::accumulate(point.rates.begin(), point.rates.end(), 0.0) / n;
    double sq = 0.0;
    for (double r : point.rates) sq += (r - point.mean) * (r - point.mean);
    point.std = std::sqrt(sq / n);
    out.points.push_back(std::move(point));
  }
  return out;
}

double sweep_trend(const SweepResult& result) {
  std::vector<double> r, rate;
  for (const auto& p : result.points) {
    r.push_back(p.ratio);
    rate.push_back(p.mean);
  }
  return metrics::spearman(r, rate);
}

}  // namespace hpred::experiment
