#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hpred/error.hpp"
#include "hpred/planner.hpp"
#include "hpred/scenario.hpp"

using namespace hpred;
using planner::ControlSequence;

namespace {

const ReferencePath kLane("lane", {{-500, 0}, {500, 0}}, 500.0);
const ReferencePath kCross("cross", {{0, -500}, {0, 500}}, 500.0);
const ReferencePath kParallel("parallel", {{-500, 50}, {500, 50}}, 500.0);

Scene two_lane_scene(const ReferencePath& ego_path, double pred_s, double pred_v, double ego_s,
                     double ego_v) {
  Scene s;
  s.id = "test";
  s.paths = {kLane, ego_path};
  s.pred_candidates = {"lane"};
  s.ego_candidates = {ego_path.id()};
  for (int i = -5; i <= 0; ++i) {
    s.pred_history.states.push_back({pred_s + pred_v * 0.2 * i, 0.0});
    s.ego_history.states.push_back({ego_s + ego_v * 0.2 * i, 0.0});
  }
  s.pred_history.path_id = "lane";
  s.ego_history.path_id = ego_path.id();
  return s;
}

// Independent integrator: exact kinematics with a stop inside the step.
Trajectory integrate(double s, double v, double d, const ControlSequence& u) {
  Trajectory t;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a = u.accel[k];
    const double t_stop = a < 0.0 ? v / -a : INFINITY;
    const double tau = std::min(0.2, t_stop);
    s += v * tau + 0.5 * a * tau * tau;
    v = std::max(0.0, v + a * tau);
    d += 0.2 * u.lateral_rate[k];
    t.states.push_back({s, d});
  }
  return t;
}

}  // namespace

TEST_CASE("rollout") {
  const planner::KinematicModel model;
  const auto cv = planner::rollout({{0.0, 0.5}, 5.0}, ControlSequence::constant(5, 0.0), model);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(cv.states[i].s == doctest::Approx(1.0 * static_cast<double>(i + 1)));
    CHECK(cv.states[i].d == 0.5);
  }
  const auto brake = planner::rollout({{0.0, 0.0}, 4.0}, ControlSequence::constant(8, -4.0), model);
  CHECK(brake.states[4].s == doctest::Approx(2.0));  // v^2 / 2a
  CHECK(brake.states[7].s == brake.states[4].s);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(-4, 4), r(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    ControlSequence u;
    for (int k = 0; k < 5; ++k) {
      u.accel.push_back(a(rng));
      u.lateral_rate.push_back(r(rng));
    }
    const auto got = planner::rollout({{1.0, -0.3}, 2.0}, u, model);
    const auto want = integrate(1.0, 2.0, -0.3, u);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(got.states[k].s == doctest::Approx(want.states[k].s).epsilon(1e-12));
      CHECK(got.states[k].d == doctest::Approx(want.states[k].d).epsilon(1e-12));
    }
  }
}

TEST_CASE("open road optimum is the constant-velocity rollout") {
  const auto scene = two_lane_scene(kParallel, -20.0, 8.0, 300.0, 0.0);
  const auto ego = constant_velocity_future(scene.ego_history, 5);
  const irl::CostWeights w{{0.25, 0.25, 0.25, 0.25}};
  const auto plan = planner::optimize_trajectory(scene, w, ego, {});
  const auto cv = constant_velocity_future(scene.pred_history, 5);
  CHECK(std::abs(plan.cost - irl::cumulative_cost(cv, ego, scene, w)) < 1e-3);
}

TEST_CASE("imminent crossing: full braking at every step") {
  // The ego is about to cross in front of the predicted vehicle.
  const auto scene = two_lane_scene(kCross, -7.0, 7.0, -4.0, 6.0);
  const auto ego = constant_velocity_future(scene.ego_history, 5);
  const irl::CostWeights w{{1.0, 0.0, 0.0, 0.0}};
  const auto plan = planner::optimize_trajectory(scene, w, ego, {});
  for (double a : plan.controls.accel) CHECK(a == -4.0);
}

TEST_CASE("optimizer beats random search and respects bounds") {
  const auto suite = scenario::corner_case_suite();
  const irl::CostWeights w{{0.4, 0.2, 0.1, 0.3}};
  for (const auto& scene : {suite[1], suite[2]}) {
    const auto& ego = *scene.ego_future;
    const auto plan = planner::optimize_trajectory(scene, w, ego, {});
    for (double c : plan.start_costs) CHECK(plan.cost <= c);
    for (double a : plan.controls.accel) CHECK(std::abs(a) <= 4.0);
    for (double r : plan.controls.lateral_rate) CHECK(std::abs(r) <= 2.0);
    for (std::size_t k = 1; k < plan.trajectory.size(); ++k) {
      CHECK(plan.trajectory.states[k].s >= plan.trajectory.states[k - 1].s);
    }

    const auto ctx = irl::CostContext::for_pred(scene);
    const planner::InitialState init{scene.pred_history.back(), current_speed(scene.pred_history)};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> a(-4, 4), r(-2, 2);
    double best = INFINITY;
    for (int i = 0; i < 10000; ++i) {
      ControlSequence u;
      for (int k = 0; k < 5; ++k) {
        u.accel.push_back(a(rng));
        u.lateral_rate.push_back(r(rng));
      }
      const auto t = planner::rollout(init, u, {}, "ring");
      best = std::min(best, irl::cumulative_cost(t, ego, ctx, w));
    }
    CHECK(plan.cost <= best);
  }
}

TEST_CASE("scaling theta keeps the optimum") {
  const auto scene = scenario::corner_case_suite()[1];
  const irl::CostWeights w{{0.4, 0.2, 0.1, 0.3}};
  irl::CostWeights big = w;
  for (double& t : big.theta) t *= 10.0;
  const auto p1 = planner::optimize_trajectory(scene, w, *scene.ego_future, {});
  const auto p2 = planner::optimize_trajectory(scene, big, *scene.ego_future, {});
  CHECK(mean_state_error(p1.trajectory, p2.trajectory) < 1e-2);
}

TEST_CASE("ego planning") {
  const auto suite = scenario::corner_case_suite();
  const irl::CostWeights w{{0.5, 0.2, 0.1, 0.2}};
  CHECK(planner::plan_ego(suite[1], planner::PlanMode::Offline, w) == *suite[1].ego_future);

  auto open = two_lane_scene(kParallel, -200.0, 8.0, -20.0, 8.0);
  const auto free = planner::plan_ego(open, planner::PlanMode::Online, w);
  const auto cv = constant_velocity_future(open.ego_history, 5);
  CHECK(mean_state_error(free, cv) < 0.05);

  // The predicted vehicle is about to occupy the crossing.
  const auto conflict = two_lane_scene(kCross, -3.0, 6.0, -8.0, 7.0);
  const irl::CostWeights careful{{1.0, 0.0, 0.0, 0.0}};
  const auto plan = planner::plan_ego(conflict, planner::PlanMode::Online, careful);
  const double v_end = (plan.states[4].s - plan.states[3].s) / 0.2;
  CHECK(v_end < 7.0);

  Scene shorty = open;
  shorty.ego_history.states.resize(1);
  shorty.pred_history.states.resize(1);
  CHECK_THROWS_AS(planner::plan_ego(shorty, planner::PlanMode::Online, w), Error);
}

TEST_CASE("constant deceleration feasibility") {
  CHECK(planner::constant_decel_feasible(two_lane_scene(kParallel, 0.0, 8.0, 0.0, 8.0)));
  CHECK_FALSE(planner::constant_decel_feasible(two_lane_scene(kCross, 0.0, 0.0, 0.0, 0.0)));
  for (const auto& scene : scenario::corner_case_suite()) {
    CHECK(planner::constant_decel_feasible(scene));
  }
}
