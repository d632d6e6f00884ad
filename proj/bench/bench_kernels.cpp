// Serial reference against the OpenMP kernels. Reports the best of a few
// repetitions and checks the results agree.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "hpred/kernels.hpp"
#include "hpred/scenario.hpp"

using namespace hpred;
using kernels::Execution;

namespace {

double best_seconds(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-18s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", kernels::thread_count());
  std::mt19937_64 rng(1);

  const cvae::CvaeShape shape;
  const auto model = cvae::CvaeModel::initialize(shape, rng);
  std::normal_distribution<double> g;
  cvae::Dataset batch(256);
  for (auto& s : batch) {
    s.x.resize(shape.x_size());
    s.y.resize(shape.y_size());
    for (double& v : s.x) v = g(rng);
    for (double& v : s.y) v = g(rng);
  }
  const auto noise = cvae::standard_normal_batch(batch.size(), shape.latent, rng);
  cvae::ElboGradient a, b;
  const double es = best_seconds(5, [&] {
    a = kernels::elbo_gradient(model, batch, noise, 0.1, Execution::Serial);
  });
  const double ep = best_seconds(5, [&] {
    b = kernels::elbo_gradient(model, batch, noise, 0.1, Execution::Parallel);
  });
  row("elbo_gradient/256", es, ep, a.encoder == b.encoder && a.decoder == b.decoder);

  const auto scene = scenario::corner_case_suite()[2];
  std::vector<Trajectory> preds;
  for (int i = 0; i < 20000; ++i) {
    auto t = constant_velocity_future(scene.pred_history, 5);
    for (auto& s : t.states) {
      s.s += 1.5 * g(rng);
      s.d += 0.3 * g(rng);
    }
    preds.push_back(t);
  }
  const irl::CostWeights w{{0.4, 0.2, 0.1, 0.3}};
  const auto& ego = *scene.ego_future;
  std::vector<double> cs, cp;
  const double cost_s = best_seconds(5, [&] {
    cs = kernels::trajectory_costs(preds, ego, scene, w, {}, Execution::Serial);
  });
  const double cost_p = best_seconds(5, [&] {
    cp = kernels::trajectory_costs(preds, ego, scene, w, {}, Execution::Parallel);
  });
  row("costs/20000", cost_s, cost_p, cs == cp);

  std::vector<std::uint8_t> fs, fp;
  const double col_s = best_seconds(5, [&] {
    fs = kernels::collision_flags(preds, ego, scene, Execution::Serial);
  });
  const double col_p = best_seconds(5, [&] {
    fp = kernels::collision_flags(preds, ego, scene, Execution::Parallel);
  });
  row("collisions/20000", col_s, col_p, fs == fp);
  return 0;
}
