#include "hpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hpred/error.hpp"
#include "hpred/kernels.hpp"

namespace hpred::metrics {

double collision_rate(std::span<const Trajectory> predictions, const Trajectory& ego_plan,
                      const Scene& scene) {
  if (predictions.empty()) throw Error(ErrorCode::InvalidArgument, "no predictions");
  const auto flags = kernels::collision_flags(predictions, ego_plan, scene);
  const auto hits = std::count(flags.begin(), flags.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

namespace {

std::vector<double> step_errors(const Trajectory& p, const Trajectory& gt) {
  if (p.size() != gt.size()) throw Error(ErrorCode::LengthMismatch, "prediction length differs");
  std::vector<double> e(gt.size());
  for (std::size_t t = 0; t < gt.size(); ++t) {
    e[t] = std::hypot(p.states[t].s - gt.states[t].s, p.states[t].d - gt.states[t].d);
  }
  return e;
}

}  // namespace

HorizonRmse rmse_per_horizon(std::span<const std::vector<Trajectory>> predictions,
                             std::span<const Trajectory> ground_truth, SampleReduction reduction) {
  if (predictions.size() != ground_truth.size() || ground_truth.empty()) {
    throw Error(ErrorCode::LengthMismatch, "need one prediction set per ground truth");
  }
  const std::size_t steps = ground_truth.front().size();
  std::vector<std::vector<double>> per_scene;
  for (std::size_t j = 0; j < ground_truth.size(); ++j) {
    if (ground_truth[j].size() != steps) throw Error(ErrorCode::LengthMismatch, "ragged horizon");
    if (predictions[j].empty()) throw Error(ErrorCode::InvalidArgument, "scene without samples");
    std::vector<double> chosen(steps, 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : predictions[j]) {
      const auto e = step_errors(p, ground_truth[j]);
      if (reduction == SampleReduction::BestOfSamples) {
        const double ade = std::accumulate(e.begin(), e.end(), 0.0);
        if (ade < best) {
          best = ade;
          chosen = e;
        }
      } else {
        for (std::size_t t = 0; t < steps; ++t) chosen[t] += e[t] * e[t];
      }
    }
    if (reduction == SampleReduction::MeanOverSamples) {
      for (double& v : chosen) v = std::sqrt(v / static_cast<double>(predictions[j].size()));
    }
    per_scene.push_back(std::move(chosen));
  }
  HorizonRmse out;
  const double n = static_cast<double>(per_scene.size());
  for (std::size_t t = 0; t < steps; ++t) {
    double sq = 0.0, sum = 0.0;
    for (const auto& e : per_scene) {
      sq += e[t] * e[t];
      sum += e[t];
    }
    const double mean = sum / n;
    out.rmse.push_back(std::sqrt(sq / n));
    out.std.push_back(std::sqrt(std::max(0.0, sq / n - mean * mean)));
  }
  return out;
}

std::vector<double> ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank;
    i = j + 1;
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "series differ in length");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 points");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::InvalidArgument, "constant series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hpred::metrics
