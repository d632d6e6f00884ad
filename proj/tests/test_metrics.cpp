#include <doctest.h>

#include <algorithm>
#include <random>

#include "hpred/error.hpp"
#include "hpred/metrics.hpp"

using namespace hpred;
using namespace hpred::metrics;

namespace {

Trajectory line(double s0, double ds, double d = 0.0, const std::string& path = "lane") {
  Trajectory t;
  t.path_id = path;
  for (int i = 0; i < 5; ++i) t.states.push_back({s0 + ds * i, d});
  return t;
}

// Lane along x and a crossing lane along y, both with s = 0 at the origin.
Scene crossing_scene() {
  Scene s;
  s.id = "x";
  s.paths = {ReferencePath("lane", {{-100, 0}, {100, 0}}, 100.0),
             ReferencePath("cross", {{0, -100}, {0, 100}}, 100.0)};
  s.pred_candidates = {"lane"};
  s.ego_candidates = {"cross"};
  s.pred_history = line(-10, 1);
  s.ego_history = line(-10, 1, 0.0, "cross");
  return s;
}

}  // namespace

TEST_CASE("rmse of exact and offset predictions") {
  const std::vector<Trajectory> gt{line(0, 1), line(5, 2)};
  const std::vector<std::vector<Trajectory>> exact{{gt[0]}, {gt[1]}};
  const auto zero = rmse_per_horizon(exact, gt);
  REQUIRE(zero.rmse.size() == 5);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(zero.rmse[t] == 0.0);
    CHECK(zero.std[t] == 0.0);
  }
  const std::vector<std::vector<Trajectory>> offset{{line(0, 1, 0.3)}, {line(5, 2, -0.3)}};
  for (auto red : {SampleReduction::BestOfSamples, SampleReduction::MeanOverSamples}) {
    const auto r = rmse_per_horizon(offset, gt, red);
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(r.rmse[t] == doctest::Approx(0.3));
      CHECK(r.std[t] == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("rmse sample reductions") {
  const std::vector<Trajectory> gt{line(0, 1)};
  const std::vector<std::vector<Trajectory>> preds{{line(0, 1, 0.1), line(0, 1, 0.5)}};
  CHECK(rmse_per_horizon(preds, gt, SampleReduction::BestOfSamples).rmse[2] ==
        doctest::Approx(0.1));
  CHECK(rmse_per_horizon(preds, gt, SampleReduction::MeanOverSamples).rmse[2] ==
        doctest::Approx(std::sqrt((0.01 + 0.25) / 2)));
}

TEST_CASE("rmse is translation consistent") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  std::vector<Trajectory> gt, gt_shift;
  std::vector<std::vector<Trajectory>> p, p_shift;
  for (int j = 0; j < 6; ++j) {
    gt.push_back(line(n(rng), 1 + n(rng), n(rng)));
    p.push_back({line(n(rng), 1, n(rng)), line(n(rng), 2, n(rng))});
  }
  gt_shift = gt;
  p_shift = p;
  auto shift = [](Trajectory& t) {
    for (auto& s : t.states) {
      s.s += 3.7;
      s.d -= 1.1;
    }
  };
  for (auto& t : gt_shift) shift(t);
  for (auto& set : p_shift) for (auto& t : set) shift(t);
  const auto a = rmse_per_horizon(p, gt);
  const auto b = rmse_per_horizon(p_shift, gt_shift);
  for (std::size_t t = 0; t < 5; ++t) CHECK(a.rmse[t] == doctest::Approx(b.rmse[t]).epsilon(1e-9));
}

TEST_CASE("rmse input errors") {
  const std::vector<Trajectory> gt{line(0, 1)};
  Trajectory short_t = line(0, 1);
  short_t.states.pop_back();
  CHECK_THROWS_AS(rmse_per_horizon(std::vector<std::vector<Trajectory>>{{short_t}}, gt), Error);
  CHECK_THROWS_AS(rmse_per_horizon(std::vector<std::vector<Trajectory>>{}, gt), Error);
}

TEST_CASE("collision rate") {
  const auto scene = crossing_scene();
  // Ego parked on the crossing.
  Trajectory ego = line(0, 0, 0.0, "cross");
  std::vector<Trajectory> far(10, line(-90, 0.5));
  CHECK(collision_rate(far, ego, scene) == 0.0);
  std::vector<Trajectory> through(10, line(-4, 2));
  CHECK(collision_rate(through, ego, scene) == 1.0);

  std::vector<Trajectory> mixed = far;
  for (int i : {1, 4, 8}) mixed[i] = line(-4, 2);
  CHECK(collision_rate(mixed, ego, scene) == doctest::Approx(0.3));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(mixed.begin(), mixed.end(), rng);
    CHECK(collision_rate(mixed, ego, scene) == doctest::Approx(0.3));
  }
  CHECK_THROWS_AS(collision_rate(std::vector<Trajectory>{}, ego, scene), Error);
}

TEST_CASE("ranks and spearman") {
  CHECK(ranks(std::vector<double>{3, 1, 2}) == std::vector<double>{3, 1, 2});
  CHECK(ranks(std::vector<double>{5, 5, 1}) == std::vector<double>{2.5, 2.5, 1});
  const std::vector<double> x{0, 0.25, 0.5, 1, 1.5, 2};
  const std::vector<double> down{0.7, 0.6, 0.5, 0.3, 0.2, 0.1};
  CHECK(spearman(x, down) == doctest::Approx(-1.0));
  const std::vector<double> up{1, 4, 9, 16, 25, 36};
  CHECK(spearman(x, up) == doctest::Approx(1.0));
  // Classic formula without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
  const std::vector<double> y{2, 1, 4, 3, 6, 5};
  CHECK(spearman(x, y) == doctest::Approx(1.0 - 6.0 * 6.0 / (6.0 * 35.0)));
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{2}), Error);
  CHECK_THROWS_AS(spearman(x, std::vector<double>(6, 0.5)), Error);
}
