#include "hpred/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpred/error.hpp"
#include "hpred/metrics.hpp"

namespace hpred::pipeline {

RatioState RatioState::from_ratio(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "ratio must be finite and >= 0");
  }
  return RatioState{r / (1.0 + r), 1.0 / (1.0 + r)};
}

double discrepancy(const Trajectory& ego_sample, const Trajectory& ego_gt, Discrepancy mode) {
  if (ego_sample.size() != ego_gt.size() || ego_gt.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "ego sample and plan differ in length");
  }
  if (mode == Discrepancy::FinalState) {
    return std::hypot(ego_sample.back().s - ego_gt.back().s, ego_sample.back().d - ego_gt.back().d);
  }
  return trajectory_rmse(ego_sample, ego_gt);
}

std::vector<SamplePair> filter_satisfied(std::span<const SamplePair> samples,
                                         const Trajectory& ego_gt, double threshold,
                                         Discrepancy mode) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be positive");
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples to filter");
  std::vector<SamplePair> out;
  for (const auto& s : samples) {
    if (discrepancy(s.ego, ego_gt, mode) <= threshold) out.push_back(s);
  }
  if (out.empty()) {
    throw Error(ErrorCode::NoSatisfiedSamples,
                "no sample within " + std::to_string(threshold) + " m of the ego plan");
  }
  return out;
}

std::size_t optimal_count(double ratio, std::size_t satisfied) {
  if (!(ratio >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ratio must be >= 0");
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(satisfied) + 0.5));
}

std::vector<SamplePair> inject_optimal(std::vector<SamplePair> satisfied, const Trajectory& xi_opt,
                                       const Trajectory& ego_gt, const RatioState& ratio) {
  if (satisfied.empty()) throw Error(ErrorCode::InvalidArgument, "inject_optimal needs N_s >= 1");
  const std::size_t n_opt = optimal_count(ratio.ratio(), satisfied.size());
  satisfied.reserve(satisfied.size() + n_opt);
  for (std::size_t i = 0; i < n_opt; ++i) {
    satisfied.push_back(SamplePair{xi_opt, ego_gt, SampleSource::Optimal});
  }
  return satisfied;
}

std::vector<double> softmax_weights(std::span<const double> costs) {
  if (costs.empty()) throw Error(ErrorCode::InvalidArgument, "softmax of empty cost list");
  double lowest = costs[0];
  for (double c : costs) {
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, "sample cost is not finite");
    lowest = std::min(lowest, c);
  }
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - lowest));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

WeightedSampleSet reweight(std::vector<SamplePair> pairs, const Scene& scene,
                           const irl::CostWeights& weights, const Trajectory& ego_gt,
                           const irl::FeatureConfig& features, kernels::Execution execution) {
  irl::validate(weights);
  std::vector<Trajectory> preds;
  preds.reserve(pairs.size());
  for (const auto& p : pairs) preds.push_back(p.pred);
  WeightedSampleSet out;
  out.costs = kernels::trajectory_costs(preds, ego_gt, scene, weights, features, execution);
  out.weights = softmax_weights(out.costs);
  out.pairs = std::move(pairs);
  return out;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights, std::size_t k,
                                            double u) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "resample count must be >= 1");
  if (weights.empty()) throw Error(ErrorCode::InvalidArgument, "resample from empty set");
  std::vector<std::size_t> out;
  out.reserve(k);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::size_t j = 0;
  double cumulative = weights[0] / total;
  for (std::size_t i = 0; i < k; ++i) {
    const double point = (u + static_cast<double>(i)) / static_cast<double>(k);
    while (point >= cumulative && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j] / total;
    }
    out.push_back(j);
  }
  return out;
}

std::vector<Trajectory> resample(const WeightedSampleSet& set, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  std::vector<Trajectory> out;
  for (std::size_t idx : systematic_indices(set.weights, k, u)) out.push_back(set.pairs[idx].pred);
  return out;
}

Trajectory mean_prediction(std::span<const SamplePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty sample set");
  Trajectory mean = pairs.front().pred;
  for (auto& s : mean.states) s = {0.0, 0.0};
  for (const auto& p : pairs) {
    if (p.pred.size() != mean.size()) throw Error(ErrorCode::LengthMismatch, "sample lengths differ");
    for (std::size_t t = 0; t < mean.size(); ++t) {
      mean.states[t].s += p.pred.states[t].s;
      mean.states[t].d += p.pred.states[t].d;
    }
  }
  const double n = static_cast<double>(pairs.size());
  for (auto& s : mean.states) s = {s.s / n, s.d / n};
  return mean;
}

double trajectory_rmse(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "trajectories differ in length");
  }
  double sq = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double ds = a.states[t].s - b.states[t].s;
    const double dd = a.states[t].d - b.states[t].d;
    sq += ds * ds + dd * dd;
  }
  return std::sqrt(sq / static_cast<double>(a.size()));
}

RatioState update_ratio(const RatioState& state, const Trajectory& observed,
                        const Trajectory& learned_pred, const Trajectory& optimal_pred,
                        double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (observed.size() != learned_pred.size() || observed.size() != optimal_pred.size() ||
      std::abs(observed.dt - learned_pred.dt) > 1e-12 ||
      std::abs(observed.dt - optimal_pred.dt) > 1e-12) {
    throw Error(ErrorCode::LengthMismatch, "ratio update trajectories differ in length or dt");
  }
  const double e_s = trajectory_rmse(observed, learned_pred);
  const double e_o = trajectory_rmse(observed, optimal_pred);
  const double two_b2 = 2.0 * bandwidth * bandwidth;
  const double log_s = std::log(state.p_s) - e_s * e_s / two_b2;
  const double log_o = std::log(state.p_opt) - e_o * e_o / two_b2;
  const double top = std::max(log_s, log_o);
  const double w_s = std::exp(log_s - top);
  const double w_o = std::exp(log_o - top);
  RatioState out;
  out.p_opt = std::max(w_o / (w_s + w_o), 1e-6);
  out.p_s = 1.0 - out.p_opt;
  return out;
}

namespace {

std::vector<SamplePair> to_pairs(std::vector<cvae::JointSample> samples) {
  std::vector<SamplePair> out;
  out.reserve(samples.size());
  for (auto& s : samples) out.push_back({std::move(s.pred), std::move(s.ego), SampleSource::Learned});
  return out;
}

}  // namespace

StepResult predict_step(const Scene& scene, const cvae::CvaeModel& model,
                        const irl::CostWeights& weights, const RatioState& ratio,
                        const PipelineConfig& config, std::mt19937_64& rng) {
  validate(scene);
  StepResult out;
  const auto x = cvae::encode_history(scene, model.shape);
  out.raw = to_pairs(cvae::sample_joint(model, x, config.raw_samples, rng,
                                        scene.pred_history.path_id, scene.ego_history.path_id));
  // Decoded futures that leave the mapped paths have no defined cost.
  std::erase_if(out.raw, [&](const SamplePair& p) {
    const auto off = [](const Trajectory& t, const ReferencePath& path) {
      return std::any_of(t.states.begin(), t.states.end(),
                         [&](const FrenetState& f) { return !on_path(f, path); });
    };
    return off(p.pred, scene.pred_path()) || off(p.ego, scene.ego_path());
  });
  // Separate stream for the learned-only comparison draw.
  std::mt19937_64 learned_rng(rng());

  const auto mode = scene.ego_future ? planner::PlanMode::Offline : planner::PlanMode::Online;
  out.ego_plan = planner::plan_ego(scene, mode, weights, config.planner);

  auto planned = planner::optimize_trajectory(scene, weights, out.ego_plan, config.planner);
  out.optimal = planned.trajectory;
  out.diagnostics.optimal_cost = planned.cost;
  out.diagnostics.n_raw = out.raw.size();

  double threshold = config.threshold;
  for (int attempt = 0;; ++attempt) {
    if (out.raw.empty()) {
      out.diagnostics.fallback = true;
      break;
    }
    try {
      out.satisfied = filter_satisfied(out.raw, out.ego_plan, threshold, config.discrepancy);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSatisfiedSamples) throw;
      if (attempt >= config.threshold_doublings) {
        out.diagnostics.fallback = true;
        break;
      }
      threshold *= 2.0;
    }
  }
  out.diagnostics.threshold_used = threshold;
  out.diagnostics.n_satisfied = out.satisfied.size();

  const double r = config.pure_learned ? 0.0 : config.forced_ratio.value_or(ratio.ratio());
  out.diagnostics.ratio = r;
  // r = 0 leaves only the learning-based hypothesis.
  const bool uniform_weights = r == 0.0;

  if (out.diagnostics.fallback) {
    // Planning-based safety net: only the optimal trajectory remains.
    out.weighted = reweight({SamplePair{out.optimal, out.ego_plan, SampleSource::Optimal}}, scene,
                            weights, out.ego_plan, config.features);
    out.predictions.assign(config.final_samples, out.optimal);
    out.learned_only = out.predictions;
  } else {
    std::vector<SamplePair> set = out.satisfied;
    if (!uniform_weights) {
      set = inject_optimal(std::move(set), out.optimal, out.ego_plan, RatioState::from_ratio(r));
    }
    out.diagnostics.n_optimal = set.size() - out.satisfied.size();
    out.weighted = reweight(std::move(set), scene, weights, out.ego_plan, config.features);
    if (uniform_weights) {
      std::fill(out.weighted.weights.begin(), out.weighted.weights.end(),
                1.0 / static_cast<double>(out.weighted.weights.size()));
    }
    out.predictions = resample(out.weighted, config.final_samples, rng);

    WeightedSampleSet uniform;
    uniform.pairs = out.satisfied;
    uniform.weights.assign(uniform.pairs.size(), 1.0 / static_cast<double>(uniform.pairs.size()));
    out.learned_only = resample(uniform, config.final_samples, learned_rng);
  }

  const auto& costs = out.weighted.costs;
  out.diagnostics.min_cost = *std::min_element(costs.begin(), costs.end());
  out.diagnostics.max_cost = *std::max_element(costs.begin(), costs.end());
  out.diagnostics.mean_cost =
      std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
  out.diagnostics.collision_rate = metrics::collision_rate(out.predictions, out.ego_plan, scene);
  out.diagnostics.learned_only_collision_rate =
      metrics::collision_rate(out.learned_only, out.ego_plan, scene);

  out.ratio = ratio;
  if (scene.pred_future && !config.forced_ratio && !config.pure_learned && !out.satisfied.empty()) {
    out.ratio = update_ratio(ratio, *scene.pred_future, mean_prediction(out.satisfied), out.optimal,
                             config.bandwidth);
  }
  return out;
}

}  // namespace hpred::pipeline
