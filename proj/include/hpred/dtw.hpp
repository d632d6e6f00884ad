#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpred/geometry.hpp"

namespace hpred {

/// Classic DTW with Euclidean local cost and {match, insert, delete} steps,
/// aligned boundary to boundary. Throws EmptySequence.
double dtw_distance(std::span<const CartesianPoint> a, std::span<const CartesianPoint> b);

struct PathLikelihoods {
  std::vector<std::pair<std::string, double>> entries;

  /// Highest-probability path id; ties go to the earlier candidate.
  const std::string& most_likely() const;
  double probability(const std::string& path_id) const;
};

/// Portion of `path` between the projections of the history endpoints,
/// resampled uniformly in arc length to `count` points.
std::vector<CartesianPoint> candidate_segment(std::span<const CartesianPoint> history,
                                              const ReferencePath& path, std::size_t count);

/// Softmax over -dtw/temperature of each candidate's matching segment.
PathLikelihoods path_likelihoods(std::span<const CartesianPoint> history,
                                 std::span<const ReferencePath> candidates,
                                 double temperature = 1.0);

}  // namespace hpred
