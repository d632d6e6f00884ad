#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "hpred/dtw.hpp"
#include "hpred/error.hpp"

using namespace hpred;

namespace {

// Minimum over every monotone alignment path. Each path is summed from the
// start, the same association order the DP uses, so results compare exactly.
double exhaustive_dtw(const std::vector<CartesianPoint>& a, const std::vector<CartesianPoint>& b) {
  double best = INFINITY;
  std::function<void(std::size_t, std::size_t, double)> go = [&](std::size_t i, std::size_t j,
                                                                 double acc) {
    acc = acc + distance(a[i], b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size() && j + 1 < b.size()) go(i + 1, j + 1, acc);
    if (i + 1 < a.size()) go(i + 1, j, acc);
    if (j + 1 < b.size()) go(i, j + 1, acc);
  };
  go(0, 0, 0.0);
  return best;
}

// Sequence number `code` over the alphabet {(0,0), (1,0), (0,1)}.
std::vector<CartesianPoint> decode(std::size_t code, std::size_t len) {
  static constexpr CartesianPoint kAlphabet[] = {{0, 0}, {1, 0}, {0, 1}};
  std::vector<CartesianPoint> out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(kAlphabet[code % 3]);
    code /= 3;
  }
  return out;
}

std::vector<std::vector<CartesianPoint>> all_sequences(std::size_t max_len) {
  std::vector<std::vector<CartesianPoint>> out;
  std::size_t count = 1;
  for (std::size_t len = 1; len <= max_len; ++len) {
    count *= 3;
    for (std::size_t code = 0; code < count; ++code) out.push_back(decode(code, len));
  }
  return out;
}

}  // namespace

TEST_CASE("dtw basics") {
  const std::vector<CartesianPoint> a{{0, 0}, {1, 0}, {2, 1}};
  CHECK(dtw_distance(a, a) == 0.0);
  const std::vector<CartesianPoint> p{{0, 0}}, q{{3, 4}};
  CHECK(dtw_distance(p, q) == 5.0);
  const std::vector<CartesianPoint> empty;
  CHECK_THROWS_AS(dtw_distance(empty, a), Error);
}

TEST_CASE("dtw equals exhaustive alignment on small sequences") {
  // All pairs up to length 4 here; the acceptance check covers length 6.
  const auto seqs = all_sequences(4);
  CHECK(seqs.size() == 120);
  std::size_t mismatches = 0;
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      const double dp = dtw_distance(a, b);
      if (dp != exhaustive_dtw(a, b) || dp != dtw_distance(b, a) || dp < 0.0) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("path likelihoods") {
  const ReferencePath a("A", {{0, 0}, {20, 0}});
  const ReferencePath far("B", {{0, 10}, {20, 10}});
  const ReferencePath below("C", {{0, -10}, {20, -10}});
  const std::vector<CartesianPoint> hist{{2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}};

  const std::vector<ReferencePath> one{a};
  CHECK(path_likelihoods(hist, one).probability("A") == doctest::Approx(1.0));

  // The B candidate is outside the 4 m corridor, so widen it for the test.
  const ReferencePath wide_b("B", far.vertices(), 0.0, 20.0);
  const std::vector<ReferencePath> two{a, wide_b};
  const auto lik = path_likelihoods(hist, two);
  CHECK(lik.probability("A") > 0.99);
  CHECK(lik.most_likely() == "A");

  const ReferencePath wide_c("C", below.vertices(), 0.0, 20.0);
  const std::vector<CartesianPoint> mid{{2, 0}, {4, 0}, {6, 0}};
  const std::vector<ReferencePath> sym{ReferencePath("B", far.vertices(), 0.0, 20.0), wide_c};
  const auto even = path_likelihoods(mid, sym);
  CHECK(even.probability("B") == doctest::Approx(0.5));
  CHECK(even.probability("C") == doctest::Approx(0.5));
  double total = 0.0;
  for (const auto& [id, p] : lik.entries) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
