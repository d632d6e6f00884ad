#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hpred/error.hpp"
#include "hpred/geometry.hpp"
#include "hpred/scenario.hpp"

using namespace hpred;

namespace {

ReferencePath quarter_arc(double radius = 20.0) {
  std::vector<CartesianPoint> v;
  for (int deg = 0; deg <= 90; ++deg) {
    const double a = deg * std::numbers::pi / 180.0;
    v.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return ReferencePath("arc", v, 0.0, 4.0);
}

// Nearest point by sampling the polyline densely; returns (arc length, distance).
std::pair<double, double> dense_nearest(const ReferencePath& path, CartesianPoint p,
                                        std::size_t samples) {
  double best_s = 0.0, best = 1e300;
  const double total = path.total_length();
  for (std::size_t i = 0; i <= samples; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(samples);
    const double dist = distance(path.point_at(s), p);
    if (dist < best) {
      best = dist;
      best_s = s;
    }
  }
  return {best_s, best};
}

}  // namespace

TEST_CASE("projection of a vertex and of a lateral offset") {
  const ReferencePath straight("a", {{0, 0}, {10, 0}}, 5.0);
  const auto v = project_to_frenet({10, 0}, straight);
  CHECK(v.s == doctest::Approx(5.0));
  CHECK(v.d == doctest::Approx(0.0));
  const auto f = project_to_frenet({5, 1}, straight);
  CHECK(f.s == doctest::Approx(0.0));
  CHECK(f.d == doctest::Approx(1.0));
  const auto right = project_to_frenet({5, -1}, straight);
  CHECK(right.d == doctest::Approx(-1.0));
}

TEST_CASE("projection outside the corridor throws") {
  const ReferencePath straight("a", {{0, 0}, {10, 0}}, 0.0, 2.0);
  CHECK_THROWS_AS(project_to_frenet({5, 2.5}, straight), Error);
  try {
    project_to_frenet({5, 2.5}, straight);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfCorridor);
  }
}

TEST_CASE("projection near an arc matches dense sampling") {
  const auto arc = quarter_arc();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.1, 1.4), radial(-3.0, 3.0);
  for (int i = 0; i < 5; ++i) {
    const double a = angle(rng), r = 20.0 + radial(rng);
    const CartesianPoint p{r * std::cos(a), r * std::sin(a)};
    const auto f = project_to_frenet(p, arc);
    const auto [s, dist] = dense_nearest(arc, p, 1'000'000);
    CHECK(std::abs(std::abs(f.d) - dist) < 1e-4);
    // The miter frame shifts the foot point by at most |d| tan(half the
    // turn angle) from the nearest point.
    const double bound = std::abs(f.d) * std::tan(0.5 * std::numbers::pi / 180.0);
    CHECK(std::abs(f.s - s) < bound + 1e-4);
  }
}

TEST_CASE("round trips on a straight path and on a 1 degree arc") {
  const ReferencePath straight("a", {{-20, 3}, {20, 3}}, 20.0, 4.0);
  const auto arc = quarter_arc();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_straight = 0.0, worst_arc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CartesianPoint p{-19.0 + 38.0 * u(rng), 3.0 + 7.8 * (u(rng) - 0.5)};
    worst_straight = std::max(worst_straight, distance(to_cartesian(project_to_frenet(p, straight), straight), p));
    const double a = 0.05 + 1.47 * u(rng), r = 20.0 + 7.8 * (u(rng) - 0.5);
    const CartesianPoint q{r * std::cos(a), r * std::sin(a)};
    worst_arc = std::max(worst_arc, distance(to_cartesian(project_to_frenet(q, arc), arc), q));
  }
  CHECK(worst_straight < 1e-6);
  CHECK(worst_arc < 1e-3);
}

TEST_CASE("frenet states round trip on the arc") {
  const auto arc = quarter_arc();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s(1.0, arc.total_length() - 1.0), d(-3.9, 3.9);
  for (int i = 0; i < 200; ++i) {
    const FrenetState f{s(rng), d(rng)};
    const auto back = project_to_frenet(to_cartesian(f, arc), arc);
    CHECK(std::abs(back.s - f.s) < 1e-6);
    CHECK(std::abs(back.d - f.d) < 1e-6);
  }
}

TEST_CASE("to_cartesian does not extrapolate") {
  const ReferencePath straight("a", {{0, 0}, {10, 0}}, 5.0);
  CHECK(to_cartesian({0.0, 0.0}, straight).x == doctest::Approx(5.0));
  CHECK_THROWS_AS(to_cartesian({5.1, 0.0}, straight), Error);
  CHECK_THROWS_AS(to_cartesian({-5.1, 0.0}, straight), Error);
  CHECK(on_path({5.0, 0.0}, straight));
  CHECK_FALSE(on_path({5.1, 0.0}, straight));
}

TEST_CASE("mirroring across the path flips d") {
  const ReferencePath straight("a", {{0, 0}, {10, 0}});
  const auto up = project_to_frenet({3, 1.5}, straight);
  const auto down = project_to_frenet({3, -1.5}, straight);
  CHECK(up.d == doctest::Approx(-down.d));
}

TEST_CASE("invalid paths are rejected") {
  CHECK_THROWS_AS(ReferencePath("a", {{0, 0}}), Error);
  CHECK_THROWS_AS(ReferencePath("a", {{0, 0}, {0, 0}, {1, 0}}), Error);
  CHECK_THROWS_AS(ReferencePath("a", {{0, 0}, {1, 0}}, 2.0), Error);
}

TEST_CASE("cross point of perpendicular paths") {
  const ReferencePath a("a", {{3, -10}, {3, 10}});
  const ReferencePath b("b", {{-10, 4}, {10, 4}});
  const auto c = cross_point(a, b);
  CHECK(c.point.x == doctest::Approx(3.0));
  CHECK(c.point.y == doctest::Approx(4.0));
  CHECK(c.arc_a == doctest::Approx(14.0));
  CHECK(c.arc_b == doctest::Approx(13.0));
  CHECK_FALSE(c.flagged);
}

TEST_CASE("identical paths cross at the first vertex, flagged") {
  const ReferencePath a("a", {{0, 0}, {5, 0}, {5, 5}});
  const auto c = cross_point(a, a);
  CHECK(c.point == CartesianPoint{0, 0});
  CHECK(c.flagged);
}

TEST_CASE("disjoint paths") {
  const ReferencePath a("a", {{0, 0}, {10, 0}});
  const ReferencePath b("b", {{0, 5}, {10, 5}});
  CHECK_THROWS_AS(cross_point(a, b), Error);
  const auto pair = anchor_at_cross_point(a, b);
  CHECK_FALSE(pair.intersects);
  CHECK(pair.cross.flagged);
  CHECK(pair.cross.point.y == doctest::Approx(2.5));
}

TEST_CASE("scenario paths cross where an all-pairs segment search says") {
  const auto paths = scenario::interaction_paths();
  const auto& a = paths[0];
  const auto& b = paths[1];
  // Brute force: every segment pair, keep the hit with the lowest arc on a.
  double best_arc = 1e300;
  CartesianPoint best{};
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  for (std::size_t i = 0; i + 1 < va.size(); ++i) {
    for (std::size_t j = 0; j + 1 < vb.size(); ++j) {
      const double rx = va[i + 1].x - va[i].x, ry = va[i + 1].y - va[i].y;
      const double sx = vb[j + 1].x - vb[j].x, sy = vb[j + 1].y - vb[j].y;
      const double den = rx * sy - ry * sx;
      if (std::abs(den) < 1e-15) continue;
      const double qx = vb[j].x - va[i].x, qy = vb[j].y - va[i].y;
      const double t = (qx * sy - qy * sx) / den, u = (qx * ry - qy * rx) / den;
      if (t < 0 || t > 1 || u < 0 || u > 1) continue;
      const double arc = a.cumulative_lengths()[i] + t * std::hypot(rx, ry);
      if (arc < best_arc) {
        best_arc = arc;
        best = {va[i].x + t * rx, va[i].y + t * ry};
      }
    }
  }
  const auto c = cross_point(a, b);
  CHECK(distance(c.point, best) < 1e-9);
  CHECK(c.arc_a == doctest::Approx(best_arc).epsilon(1e-12));
  // Generated paths are anchored there.
  CHECK(distance(to_cartesian({0, 0}, a), c.point) < 1e-9);
  CHECK(distance(to_cartesian({0, 0}, b), c.point) < 1e-9);
  CHECK(a.nearest(c.point).distance < 1e-9);
  CHECK(b.nearest(c.point).distance < 1e-9);
}

TEST_CASE("three-circle collision") {
  const ReferencePath a("a", {{-50, 0}, {50, 0}}, 50.0);
  const ReferencePath b("b", {{0, -50}, {0, 50}}, 50.0);
  const VehicleFootprint fp;
  CHECK(collision({0, 0}, a, {0, 0}, b, fp, fp));
  CHECK_FALSE(collision({-40, 0}, a, {45, 0}, b, fp, fp));

  // Parallel vehicles side by side: every circle pair is at least the lateral
  // gap apart, and the aligned pairs exactly so.
  const ReferencePath c("c", {{-50, 0}, {50, 0}}, 50.0, 10.0);
  const double gap = 2.0 + 0.01;
  CHECK_FALSE(collision({0, 0}, c, {0, gap}, c, fp, fp));
  CHECK(collision({0, 0}, c, {0, 1.99}, c, fp, fp));
}

TEST_CASE("collision is symmetric") {
  const ReferencePath a("a", {{-50, 0}, {50, 0}}, 50.0);
  const ReferencePath b("b", {{-50, -50}, {50, 50}}, 70.0);
  const VehicleFootprint fa, fb{4.0, 1.6, 0.9, {-1.2, 0.0, 1.2}};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> s(-8, 8), d(-2, 2);
  for (int i = 0; i < 500; ++i) {
    const FrenetState x{s(rng), d(rng)}, y{s(rng), d(rng)};
    CHECK(collision(x, a, y, b, fa, fb) == collision(y, b, x, a, fb, fa));
  }
}
