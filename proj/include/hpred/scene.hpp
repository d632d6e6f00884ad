#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpred/geometry.hpp"

namespace hpred {

/// Histories of the interacting vehicles plus the map context they live in.
/// Trajectories carry the id of the path whose Frenet frame they use; all
/// paths are anchored at the pred/ego cross point.
struct Scene {
  std::string id;
  Trajectory pred_history;
  Trajectory ego_history;
  std::vector<Trajectory> surr_histories;
  std::vector<ReferencePath> paths;
  std::vector<std::string> pred_candidates;
  std::vector<std::string> ego_candidates;
  double speed_limit = 8.0;
  VehicleFootprint pred_footprint;
  VehicleFootprint ego_footprint;
  VehicleFootprint surr_footprint;
  bool no_intersection = false;

  // Recorded futures, when the scene comes from a log or the generator.
  std::optional<Trajectory> pred_future;
  std::optional<Trajectory> ego_future;

  const ReferencePath& path(std::string_view path_id) const;
  const ReferencePath& pred_path() const { return path(pred_history.path_id); }
  const ReferencePath& ego_path() const { return path(ego_history.path_id); }
  double dt() const { return pred_history.dt; }
};

/// Checks shared dt, equal history lengths and that every referenced path
/// exists. Throws InvalidArgument.
void validate(const Scene& scene);

/// Longitudinal speed from the last two states. Throws InsufficientHistory.
double current_speed(const Trajectory& history);

/// Trajectory of `count` states continuing `history` at its current speed.
Trajectory constant_velocity_future(const Trajectory& history, std::size_t count);

/// Mean Euclidean (s, d) error between equal-length trajectories.
double mean_state_error(const Trajectory& a, const Trajectory& b);

}  // namespace hpred
