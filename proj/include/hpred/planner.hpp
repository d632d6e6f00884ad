#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hpred/irl.hpp"
#include "hpred/scene.hpp"

namespace hpred::planner {

struct ControlBounds {
  double max_accel = 4.0;         ///< m/s^2, both directions
  double max_lateral_rate = 2.0;  ///< m/s
};

/// Longitudinal accelerations and lateral rates, one per horizon step.
struct ControlSequence {
  std::vector<double> accel;
  std::vector<double> lateral_rate;

  std::size_t size() const { return accel.size(); }
  static ControlSequence constant(std::size_t n, double accel, double lateral_rate = 0.0);
  friend bool operator==(const ControlSequence&, const ControlSequence&) = default;
};

struct KinematicModel {
  double dt = 0.2;
};

struct InitialState {
  FrenetState state;
  double velocity = 0.0;
};

/// Forward integration; velocity is clamped at zero and a vehicle that stops
/// within a step advances only its stopping distance.
Trajectory rollout(const InitialState& initial, const ControlSequence& controls,
                   const KinematicModel& model, const std::string& path_id = {});

struct PlannerConfig {
  ControlBounds bounds;
  std::size_t horizon = 5;
  std::size_t max_iterations = 400;
  double gradient_tolerance = 1e-3;
  double fd_step = 1e-6;
  irl::FeatureConfig features;
};

struct IterationRecord {
  std::size_t start = 0;
  std::size_t iteration = 0;
  double cost = 0.0;
  double projected_gradient_norm = 0.0;
  double step = 0.0;
};

struct PlanResult {
  Trajectory trajectory;
  ControlSequence controls;
  double cost = 0.0;
  std::size_t best_start = 0;
  std::vector<double> start_costs;  ///< rollout cost of each initial guess
  std::size_t iterations = 0;       ///< of the winning start
  bool converged = false;           ///< projected gradient below tolerance
  std::vector<IterationRecord> log;
};

/// Projected gradient descent over the control sequence with Armijo
/// backtracking. Starts: zero controls, full braking, full acceleration.
PlanResult optimize(const irl::CostContext& ctx, const Trajectory& other_plan,
                    const irl::CostWeights& weights, const PlannerConfig& config = {},
                    const std::string& path_id = {});

/// Optimal predicted-vehicle trajectory against the ego plan.
PlanResult optimize_trajectory(const Scene& scene, const irl::CostWeights& weights,
                               const Trajectory& ego_plan, const PlannerConfig& config = {});

enum class PlanMode { Offline, Online };

/// Offline: the recorded ego future. Online: the ego optimizes the same cost
/// against a constant-velocity extrapolation of the predicted vehicle.
Trajectory plan_ego(const Scene& scene, PlanMode mode, const irl::CostWeights& weights,
                    const PlannerConfig& config = {});

struct FeasibilityConfig {
  double max_decel = 4.0;
  double decel_step = 0.1;
  double lookahead = 3.0;
};

/// True when braking one of the two vehicles at some constant deceleration,
/// while the other keeps its speed, avoids collision over the look-ahead.
bool constant_decel_feasible(const Scene& scene, const FeasibilityConfig& config = {});

}  // namespace hpred::planner
