#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "hpred/error.hpp"
#include "hpred/scenario.hpp"

using namespace hpred;
using namespace hpred::scenario;

namespace {

double max_state_gap(const Trajectory& a, const Trajectory& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max({m, std::abs(a.states[i].s - b.states[i].s),
                  std::abs(a.states[i].d - b.states[i].d)});
  }
  return m;
}

// Second differences of s: a constant-deceleration law with a stop.
void check_kinematics(const Trajectory& history, const Trajectory& future, double v0) {
  double s = history.back().s, v = v0;
  for (std::size_t k = 0; k < future.size(); ++k) {
    const double ds = future.states[k].s - s;
    CHECK(ds >= -1e-12);
    CHECK(ds <= v * kDt + 1e-9);
    v = std::max(0.0, 2.0 * ds / kDt - v);
    s = future.states[k].s;
  }
}

}  // namespace

TEST_CASE("paths cross at the origin of both") {
  const auto paths = interaction_paths();
  REQUIRE(paths.size() == 2);
  const auto a = to_cartesian({0.0, 0.0}, paths[0]);
  const auto b = to_cartesian({0.0, 0.0}, paths[1]);
  CHECK(std::hypot(a.x - b.x, a.y - b.y) < 1e-9);
  // The ring's chord between -0.5 and +0.5 degrees.
  CHECK(a.x == doctest::Approx(kRingRadius * std::cos(0.5 * std::numbers::pi / 180.0)).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(0.0));
}

TEST_CASE("noise-free futures follow the kinematic model exactly") {
  for (auto mode : {BehaviorMode::RationalYield, BehaviorMode::RationalProceed,
                    BehaviorMode::IrrationalIgnore}) {
    ScenarioSpec spec;
    spec.mode = mode;
    spec.noise = 0.0;
    const auto scene = generate_scene(spec);
    // History at constant speed.
    for (std::size_t k = 1; k < scene.pred_history.size(); ++k) {
      CHECK(scene.pred_history.states[k].s - scene.pred_history.states[k - 1].s ==
            doctest::Approx(spec.pred_speed * kDt).epsilon(1e-12));
    }
    const double a = mode == BehaviorMode::RationalYield
                         ? -yield_deceleration(spec.pred_speed, spec.pred_gap)
                         : 0.0;
    double s = -spec.pred_gap, v = spec.pred_speed;
    for (const auto& f : scene.pred_future->states) {
      const double tau = a < 0.0 ? std::min(kDt, v / -a) : kDt;
      s += v * tau + 0.5 * a * tau * tau;
      v = std::max(0.0, v + a * tau);
      CHECK(std::abs(f.s - s) < 1e-9);
      CHECK(f.d == 0.0);
    }
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(scene.ego_future->states[k].s -
                     (-spec.ego_gap + spec.ego_speed * kDt * static_cast<double>(k + 1))) < 1e-9);
    }
  }
}

TEST_CASE("rational yield decelerates monotonically") {
  ScenarioSpec spec;
  spec.mode = BehaviorMode::RationalYield;
  spec.noise = 0.0;
  const auto scene = generate_scene(spec);
  double prev = spec.pred_speed * kDt;
  double s = scene.pred_history.back().s;
  for (const auto& f : scene.pred_future->states) {
    const double step = f.s - s;
    CHECK(step <= prev + 1e-12);
    prev = step;
    s = f.s;
  }
  check_kinematics(scene.pred_history, *scene.pred_future, spec.pred_speed);
}

TEST_CASE("irrational ignore with close arrival times collides") {
  // Arrival gap 9.5/7 - 6/6 = 0.36 s.
  ScenarioSpec spec;
  spec.noise = 0.0;
  CHECK(std::abs(spec.pred_gap / spec.pred_speed - spec.ego_gap / spec.ego_speed) < 0.5);
  CHECK(futures_collide(generate_scene(spec)));
}

TEST_CASE("specs are validated") {
  ScenarioSpec bad;
  bad.ego_speed = -1;
  CHECK_THROWS_AS(generate_scene(bad), Error);
  ScenarioSpec far;
  far.pred_gap = 500;
  CHECK_THROWS_AS(generate_scene(far), Error);
  ScenarioSpec spec;
  spec.surround = 2;
  spec.mode = BehaviorMode::RationalYield;
  const auto j = to_json(spec);
  const auto back = spec_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(behavior_from_string(to_string(BehaviorMode::RationalProceed)) ==
        BehaviorMode::RationalProceed);
}

TEST_CASE("dataset invariants") {
  DatasetConfig cfg;
  cfg.count = 200;
  cfg.mix = 0.0;
  cfg.seed = 3;
  const auto rational = generate_dataset(cfg);
  for (const auto* part : {&rational.train, &rational.test}) {
    for (const auto& s : *part) CHECK_FALSE(futures_collide(s));
  }

  cfg.mix = 1.0;
  cfg.force_conflict = true;
  const auto forced = generate_dataset(cfg);
  for (const auto* part : {&forced.train, &forced.test}) {
    for (const auto& s : *part) CHECK(futures_collide(s));
  }

  cfg = {};
  cfg.count = 1000;
  cfg.mix = 0.5;
  const auto half = generate_dataset(cfg);
  std::size_t irr = 0;
  for (const auto* modes : {&half.train_modes, &half.test_modes}) {
    irr += static_cast<std::size_t>(std::count(modes->begin(), modes->end(),
                                               BehaviorMode::IrrationalIgnore));
  }
  CHECK(irr == 500);
  CHECK(half.train.size() == 800);
  CHECK(half.test.size() == 200);
  std::set<std::string> ids;
  for (const auto* part : {&half.train, &half.test}) {
    for (const auto& s : *part) ids.insert(s.id);
  }
  CHECK(ids.size() == 1000);
  for (auto i : half.demonstration_indices()) CHECK(is_rational(half.train_modes[i]));

  cfg.count = 100;
  const auto a = generate_dataset(cfg);
  const auto b = generate_dataset(cfg);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].pred_history == b.train[i].pred_history);
    CHECK(a.train[i].ego_future == b.train[i].ego_future);
  }
  cfg.count = 9;
  CHECK_THROWS_AS(generate_dataset(cfg), Error);
}

TEST_CASE("corner-case suite") {
  const auto suite = corner_case_suite();
  REQUIRE(suite.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(suite[i].pred_history == suite[0].pred_history);
    CHECK_FALSE(suite[i].pred_future.has_value());
    const auto& ego = suite[i].ego_history;
    CHECK(ego.states[0].s == doctest::Approx(-12.0));
    const auto& f = *suite[i].ego_future;
    double s = ego.back().s;
    for (const auto& st : f.states) {
      CHECK(st.s - s == doctest::Approx(kCornerSpeeds[i] * kDt).epsilon(1e-12));
      s = st.s;
    }
  }
}

TEST_CASE("CSV round trip") {
  DatasetConfig cfg;
  cfg.count = 20;
  cfg.mix = 0.5;
  const auto data = generate_dataset(cfg);
  std::ostringstream out;
  export_csv(data.train, out);
  std::istringstream in(out.str());
  const auto back = import_csv(in, interaction_paths());
  REQUIRE(back.size() == data.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = data.train[i];
    const auto& b = back[i];
    CHECK(a.id == b.id);
    CHECK(a.pred_history.path_id == b.pred_history.path_id);
    CHECK(a.ego_history.path_id == b.ego_history.path_id);
    CHECK(b.pred_history.dt == a.pred_history.dt);
    CHECK(max_state_gap(a.pred_history, b.pred_history) < 1e-6);
    CHECK(max_state_gap(a.ego_history, b.ego_history) < 1e-6);
    CHECK(max_state_gap(*a.pred_future, *b.pred_future) < 1e-6);
    CHECK(max_state_gap(*a.ego_future, *b.ego_future) < 1e-6);
    REQUIRE(a.surr_histories.size() == b.surr_histories.size());
    for (std::size_t k = 0; k < a.surr_histories.size(); ++k) {
      CHECK(max_state_gap(a.surr_histories[k], b.surr_histories[k]) < 1e-6);
    }
  }
}

TEST_CASE("hand-written CSV") {
  // Pred drives west on the entry lane, ego north across it at x = 20.
  const ReferencePath lane("lane", {{40, 0}, {0, 0}}, 20.0);
  const ReferencePath cross("cross", {{20, -20}, {20, 20}}, 20.0);
  std::istringstream in(
      "scene_id,t,vehicle_id,role,x,y\n"
      "a,-0.2,p1,pred,31,0\n"
      "a,0,p1,pred,29.5,0.25\n"
      "a,0.2,p1,pred,28,0\n"
      "a,-0.2,e1,ego,20,-10\n"
      "a,0,e1,ego,20,-9\n");
  const auto scenes = import_csv(in, {lane, cross});
  REQUIRE(scenes.size() == 1);
  const auto& s = scenes[0];
  CHECK(s.pred_history.path_id == "lane");
  CHECK(s.ego_history.path_id == "cross");
  CHECK(s.dt() == doctest::Approx(0.2));
  CHECK(s.pred_history.states[0].s == doctest::Approx(-11.0));
  CHECK(s.pred_history.states[1].s == doctest::Approx(-9.5));
  // West-bound, so +y is to the right of travel.
  CHECK(s.pred_history.states[1].d == doctest::Approx(-0.25));
  CHECK(s.pred_future->states[0].s == doctest::Approx(-8.0));
  CHECK(s.ego_history.states[1].s == doctest::Approx(-9.0));
  CHECK_FALSE(s.ego_future.has_value());
}

TEST_CASE("CSV schema errors") {
  const auto paths = interaction_paths();
  auto message = [&](const std::string& text) {
    std::istringstream in(text);
    try {
      import_csv(in, paths);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("scene_id,t,vehicle_id,role,x\n").find("'y'") != std::string::npos);
  CHECK(message("").find("header") != std::string::npos);
  const auto bad = message("scene_id,t,vehicle_id,role,x,y\na,0,p,pred,oops,0\n");
  CHECK(bad.find("row 2") != std::string::npos);
  CHECK(bad.find("x") != std::string::npos);
  CHECK(message("scene_id,t,vehicle_id,role,x,y\na,0,p,boss,1,0\n").find("role") !=
        std::string::npos);
}

TEST_CASE("path files round trip") {
  const auto paths = interaction_paths();
  std::ostringstream csv;
  nlohmann::json side;
  export_paths(paths, csv, side);
  std::istringstream in(csv.str());
  const auto back = import_paths(in, side);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id() == paths[i].id());
    CHECK(back[i].vertices().size() == paths[i].vertices().size());
    CHECK(back[i].origin_arc_length() == paths[i].origin_arc_length());
    const auto p = to_cartesian({3.0, 0.4}, back[i]);
    const auto q = to_cartesian({3.0, 0.4}, paths[i]);
    CHECK(p.x == q.x);
    CHECK(p.y == q.y);
  }
}
