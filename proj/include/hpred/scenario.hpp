#pragma once

// Synthetic crossing-path scenes: a straight entry lane (ego) crossing a
// 20 m radius arc (predicted vehicle), both anchored at the cross point.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hpred/scene.hpp"

namespace hpred::scenario {

inline constexpr const char* kEntryPathId = "entry";
inline constexpr const char* kRingPathId = "ring";
inline constexpr std::size_t kHistoryStates = 6;
inline constexpr std::size_t kFutureStates = 5;
inline constexpr double kDt = 0.2;
inline constexpr double kRingRadius = 20.0;

enum class BehaviorMode { RationalYield, RationalProceed, IrrationalIgnore };

std::string_view to_string(BehaviorMode mode);
BehaviorMode behavior_from_string(std::string_view name);
bool is_rational(BehaviorMode mode);

/// Initial conditions of one scene. Gaps are measured along each path from
/// the vehicle's current position to the cross point.
struct ScenarioSpec {
  double ego_speed = 6.0;
  double pred_speed = 7.0;
  double ego_gap = 6.0;
  double pred_gap = 9.5;
  BehaviorMode mode = BehaviorMode::IrrationalIgnore;
  double noise = 0.05;
  std::uint64_t seed = 1;
  int surround = 0;  ///< passive vehicles, 0..2
  std::string id = "scene";
};

/// Throws InvalidArgument.
void validate(const ScenarioSpec& spec);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec spec_from_json(const nlohmann::json& j);

/// Entry lane and arc, both with s = 0 at their crossing.
std::vector<ReferencePath> interaction_paths();

/// Constant deceleration that stops the predicted vehicle `stop_margin`
/// before the cross point, capped at `max_decel`.
double yield_deceleration(double speed, double gap, double stop_margin = 4.5,
                          double max_decel = 4.0);

/// Scene with ground-truth futures for both vehicles. Deterministic per
/// spec. Throws InfeasibleSpec when a history does not fit on its path.
Scene generate_scene(const ScenarioSpec& spec);

/// True when the recorded futures collide at any step while both vehicles
/// are on their paths.
bool futures_collide(const Scene& scene);

struct DatasetConfig {
  std::size_t count = 1000;
  double mix = 0.0;  ///< fraction of irrational-ignore scenes, exact count
  std::uint64_t seed = 1;
  double noise = 0.05;
  double train_fraction = 0.8;
  /// Probability that a rational scene is drawn with conflicting
  /// constant-speed arrivals (and therefore yields).
  double rational_conflict = 0.9;
  /// Same for irrational scenes; the rest keep speed through a safe gap.
  double irrational_conflict = 0.6;
  /// Every scene conflicts; irrational futures then always collide.
  bool force_conflict = false;
  int max_surround = 2;
};

struct Dataset {
  std::vector<Scene> train;
  std::vector<Scene> test;
  std::vector<BehaviorMode> train_modes;
  std::vector<BehaviorMode> test_modes;

  /// Indices into `train` of scenes usable as IRL demonstrations.
  std::vector<std::size_t> demonstration_indices() const;
};

/// Throws DatasetTooSmall below 10 scenes.
Dataset generate_dataset(const DatasetConfig& config);

/// Ego speeds of the corner-case suite.
inline constexpr double kCornerSpeeds[] = {4.0, 6.0, 7.0, 8.0};

/// Four scenes sharing the predicted-vehicle history and the ego's state at
/// the start of its history; the ego then drives at a constant speed.
std::vector<Scene> corner_case_suite();

/// CSV with columns scene_id,t,vehicle_id,role,x,y; history rows have
/// t <= 0, future rows t > 0.
void export_csv(const std::vector<Scene>& scenes, std::ostream& out);
/// Vehicles are assigned to their most likely path by DTW over `paths`.
/// Throws SchemaError with the row and column of the problem.
std::vector<Scene> import_csv(std::istream& in, const std::vector<ReferencePath>& paths);

/// Path vertices as path_id,vertex_index,x,y plus a JSON sidecar holding the
/// per-path origin and corridor.
void export_paths(const std::vector<ReferencePath>& paths, std::ostream& csv,
                  nlohmann::json& sidecar);
std::vector<ReferencePath> import_paths(std::istream& csv, const nlohmann::json& sidecar);

}  // namespace hpred::scenario
