#include "hpred/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpred/error.hpp"

namespace hpred {

double dtw_distance(std::span<const CartesianPoint> a, std::span<const CartesianPoint> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::EmptySequence, "dtw_distance needs non-empty sequences");
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Two rolling rows of the (n+1) x (m+1) cumulative cost table.
  std::vector<double> prev(m + 1, inf);
  std::vector<double> curr(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    curr[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = distance(a[i - 1], b[j - 1]);
      curr[j] = cost + std::min({prev[j - 1], prev[j], curr[j - 1]});
    }
    std::swap(prev, curr);
  }
  return prev[m];
}

const std::string& PathLikelihoods::most_likely() const {
  if (entries.empty()) throw Error(ErrorCode::EmptySequence, "no path likelihoods");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].second > entries[best].second) best = i;
  }
  return entries[best].first;
}

double PathLikelihoods::probability(const std::string& path_id) const {
  for (const auto& [id, p] : entries) {
    if (id == path_id) return p;
  }
  return 0.0;
}

std::vector<CartesianPoint> candidate_segment(std::span<const CartesianPoint> history,
                                              const ReferencePath& path, std::size_t count) {
  if (history.empty() || count == 0) {
    throw Error(ErrorCode::EmptySequence, "candidate_segment needs a non-empty history");
  }
  const double start = path.nearest(history.front()).arc_length;
  const double end = path.nearest(history.back()).arc_length;
  std::vector<CartesianPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(path.point_at(start + frac * (end - start)));
  }
  return out;
}

PathLikelihoods path_likelihoods(std::span<const CartesianPoint> history,
                                 std::span<const ReferencePath> candidates, double temperature) {
  if (history.empty()) {
    throw Error(ErrorCode::EmptySequence, "path_likelihoods needs a non-empty history");
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::InvalidArgument, "path_likelihoods needs at least one candidate");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  std::vector<double> logits;
  logits.reserve(candidates.size());
  for (const auto& path : candidates) {
    const auto segment = candidate_segment(history, path, history.size());
    logits.push_back(-dtw_distance(history, segment) / temperature);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  PathLikelihoods out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.entries.emplace_back(candidates[i].id(), logits[i] / total);
  }
  return out;
}

}  // namespace hpred
