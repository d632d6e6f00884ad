#include <doctest.h>

#include <random>

#include "hpred/experiment.hpp"
#include "hpred/kernels.hpp"
#include "hpred/scenario.hpp"

using namespace hpred;
using kernels::Execution;

TEST_CASE("parallel ELBO gradient is bitwise serial") {
  std::mt19937_64 rng(1);
  const cvae::CvaeShape shape;
  const auto model = cvae::CvaeModel::initialize(shape, rng);
  scenario::DatasetConfig dc;
  dc.count = 80;
  const auto data = scenario::generate_dataset(dc);
  auto batch = experiment::cvae_dataset(data.train, shape);
  const auto noise = cvae::standard_normal_batch(batch.size(), shape.latent, rng);
  const auto a = kernels::elbo_gradient(model, batch, noise, 0.1, Execution::Serial);
  const auto b = kernels::elbo_gradient(model, batch, noise, 0.1, Execution::Parallel);
  CHECK(a.loss == b.loss);
  CHECK(a.encoder == b.encoder);
  CHECK(a.decoder == b.decoder);
}

TEST_CASE("parallel costs and collision flags match serial") {
  const auto scene = scenario::corner_case_suite()[2];
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1.5);
  std::vector<Trajectory> preds;
  for (int i = 0; i < 300; ++i) {
    auto t = constant_velocity_future(scene.pred_history, 5);
    for (auto& s : t.states) {
      s.s += n(rng);
      s.d += 0.2 * n(rng);
    }
    preds.push_back(t);
  }
  const irl::CostWeights w{{0.4, 0.2, 0.1, 0.3}};
  const auto& ego = *scene.ego_future;
  CHECK(kernels::trajectory_costs(preds, ego, scene, w, {}, Execution::Serial) ==
        kernels::trajectory_costs(preds, ego, scene, w, {}, Execution::Parallel));
  const auto fs = kernels::collision_flags(preds, ego, scene, Execution::Serial);
  CHECK(fs == kernels::collision_flags(preds, ego, scene, Execution::Parallel));
  CHECK(std::count(fs.begin(), fs.end(), 1) > 0);
  CHECK(kernels::thread_count() >= 1);
}

TEST_CASE("exceptions inside the parallel region propagate") {
  const auto scene = scenario::corner_case_suite()[0];
  std::vector<Trajectory> preds(8, constant_velocity_future(scene.pred_history, 5));
  preds[5].states.pop_back();
  const irl::CostWeights w{{0.25, 0.25, 0.25, 0.25}};
  CHECK_THROWS(kernels::trajectory_costs(preds, *scene.ego_future, scene, w, {},
                                         Execution::Parallel));
}
