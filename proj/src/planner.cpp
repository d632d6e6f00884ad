#include "hpred/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hpred/error.hpp"

namespace hpred::planner {

ControlSequence ControlSequence::constant(std::size_t n, double accel, double lateral_rate) {
  return ControlSequence{std::vector<double>(n, accel), std::vector<double>(n, lateral_rate)};
}

Trajectory rollout(const InitialState& initial, const ControlSequence& controls,
                   const KinematicModel& model, const std::string& path_id) {
  if (controls.accel.size() != controls.lateral_rate.size()) {
    throw Error(ErrorCode::LengthMismatch, "control sequence channels differ in length");
  }
  const double dt = model.dt;
  Trajectory out{{}, dt, path_id};
  out.states.reserve(controls.size());
  double s = initial.state.s;
  double d = initial.state.d;
  double v = std::max(0.0, initial.velocity);
  for (std::size_t t = 0; t < controls.size(); ++t) {
    const double a = controls.accel[t];
    if (v + a * dt >= 0.0) {
      s += v * dt + 0.5 * a * dt * dt;
      v += a * dt;
    } else {
      s += v * v / (2.0 * -a);
      v = 0.0;
    }
    d += controls.lateral_rate[t] * dt;
    out.states.push_back({s, d});
  }
  return out;
}

namespace {

using Vec = std::vector<double>;

struct Problem {
  const irl::CostContext& ctx;
  const Trajectory& other;
  const irl::CostWeights& weights;
  const PlannerConfig& config;
  InitialState initial;
  std::size_t n;

  ControlSequence controls(const Vec& x) const {
    return ControlSequence{Vec(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)),
                           Vec(x.begin() + static_cast<std::ptrdiff_t>(n), x.end())};
  }

  double cost(const Vec& x) const {
    const auto traj = rollout(initial, controls(x), KinematicModel{ctx.dt});
    const double c = irl::cumulative_cost(traj, other, ctx, weights);
    if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteCost, "planner cost is not finite");
    return c;
  }

  Vec project(Vec x) const {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::clamp(x[i], -config.bounds.max_accel, config.bounds.max_accel);
      x[n + i] = std::clamp(x[n + i], -config.bounds.max_lateral_rate, config.bounds.max_lateral_rate);
    }
    return x;
  }

  Vec gradient(const Vec& x) const {
    Vec g(x.size());
    const double h = config.fd_step;
    for (std::size_t i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (cost(xp) - cost(xm)) / (2.0 * h);
    }
    return g;
  }
};

double projected_gradient_norm(const Problem& p, const Vec& x, const Vec& g) {
  Vec moved(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] - g[i];
  moved = p.project(moved);
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) norm += (x[i] - moved[i]) * (x[i] - moved[i]);
  return std::sqrt(norm);
}

struct LocalResult {
  Vec x;
  double cost;
  std::size_t iterations;
  bool converged;
};

LocalResult descend(const Problem& p, Vec x, std::size_t start, std::vector<IterationRecord>& log) {
  x = p.project(std::move(x));
  double fx = p.cost(x);
  Vec g = p.gradient(x);
  double alpha = 1.0;
  Vec prev_x, prev_g;
  std::size_t it = 0;
  bool converged = false;
  for (; it < p.config.max_iterations; ++it) {
    const double pg = projected_gradient_norm(p, x, g);
    log.push_back({start, it, fx, pg, alpha});
    if (pg < p.config.gradient_tolerance) {
      converged = true;
      break;
    }
    if (!prev_x.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x[i] - prev_x[i];
        const double y = g[i] - prev_g[i];
        ss += s * s;
        sy += s * y;
      }
      alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-8, 1e8) : std::min(1e8, 2.0 * alpha);
    }
    bool accepted = false;
    Vec candidate;
    double fc = fx;
    for (int tries = 0; tries < 60; ++tries) {
      candidate.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) candidate[i] = x[i] - alpha * g[i];
      candidate = p.project(candidate);
      double decrease = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) decrease += g[i] * (candidate[i] - x[i]);
      fc = p.cost(candidate);
      if (fc <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || candidate == x) break;
    prev_x = std::move(x);
    prev_g = std::move(g);
    x = std::move(candidate);
    fx = fc;
    g = p.gradient(x);
  }
  return {x, fx, it, converged};
}

}  // namespace

PlanResult optimize(const irl::CostContext& ctx, const Trajectory& other_plan,
                    const irl::CostWeights& weights, const PlannerConfig& config,
                    const std::string& path_id) {
  irl::validate(weights);
  const std::size_t n = other_plan.size();
  if (n != config.horizon) {
    throw Error(ErrorCode::LengthMismatch, "other plan length " + std::to_string(n) +
                                               " differs from horizon " +
                                               std::to_string(config.horizon));
  }
  const Problem problem{ctx, other_plan, weights, config,
                        InitialState{ctx.current, (ctx.current.s - ctx.previous.s) / ctx.dt}, n};

  const std::array<double, 3> start_accel{0.0, -config.bounds.max_accel, config.bounds.max_accel};
  PlanResult result;
  result.cost = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < start_accel.size(); ++start) {
    Vec x(2 * n, 0.0);
    std::fill(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), start_accel[start]);
    result.start_costs.push_back(problem.cost(x));
    const auto local = descend(problem, x, start, result.log);
    if (local.cost < result.cost) {
      result.cost = local.cost;
      result.controls = problem.controls(local.x);
      result.best_start = start;
      result.iterations = local.iterations;
      result.converged = local.converged;
    }
  }
  result.trajectory = rollout(problem.initial, result.controls, KinematicModel{ctx.dt}, path_id);
  return result;
}

PlanResult optimize_trajectory(const Scene& scene, const irl::CostWeights& weights,
                               const Trajectory& ego_plan, const PlannerConfig& config) {
  const auto ctx = irl::CostContext::for_pred(scene, config.features);
  return optimize(ctx, ego_plan, weights, config, scene.pred_history.path_id);
}

Trajectory plan_ego(const Scene& scene, PlanMode mode, const irl::CostWeights& weights,
                    const PlannerConfig& config) {
  if (scene.ego_history.size() < 2) {
    throw Error(ErrorCode::InsufficientHistory, "ego history needs at least 2 states");
  }
  if (mode == PlanMode::Offline) {
    if (!scene.ego_future) {
      throw Error(ErrorCode::InvalidArgument, "offline ego planning needs a recorded ego future");
    }
    return *scene.ego_future;
  }
  const auto pred_plan = constant_velocity_future(scene.pred_history, config.horizon);
  const auto ctx = irl::CostContext::for_ego(scene, config.features);
  return optimize(ctx, pred_plan, weights, config, scene.ego_history.path_id).trajectory;
}

namespace {

std::vector<FrenetState> braking_states(const Trajectory& history, double decel,
                                        std::size_t steps) {
  const InitialState init{history.back(), current_speed(history)};
  auto traj = rollout(init, ControlSequence::constant(steps, -decel), KinematicModel{history.dt});
  traj.states.insert(traj.states.begin(), history.back());
  return traj.states;
}

bool collision_free(const Scene& scene, const std::vector<FrenetState>& pred,
                    const std::vector<FrenetState>& ego) {
  const auto& pp = scene.pred_path();
  const auto& ep = scene.ego_path();
  for (std::size_t k = 0; k < pred.size(); ++k) {
    // A vehicle that has driven off the end of its mapped path has left the
    // interaction area.
    if (!on_path(pred[k], pp) || !on_path(ego[k], ep)) break;
    if (collision(pred[k], pp, ego[k], ep, scene.pred_footprint, scene.ego_footprint)) return false;
  }
  return true;
}

}  // namespace

bool constant_decel_feasible(const Scene& scene, const FeasibilityConfig& config) {
  const auto steps = static_cast<std::size_t>(std::llround(config.lookahead / scene.dt()));
  const auto pred_cruise = braking_states(scene.pred_history, 0.0, steps);
  const auto ego_cruise = braking_states(scene.ego_history, 0.0, steps);
  const auto count = static_cast<int>(std::floor(config.max_decel / config.decel_step + 1e-9));
  for (int i = 0; i <= count; ++i) {
    const double decel = config.decel_step * i;
    if (collision_free(scene, braking_states(scene.pred_history, decel, steps), ego_cruise)) return true;
    if (collision_free(scene, pred_cruise, braking_states(scene.ego_history, decel, steps))) return true;
  }
  return false;
}

}  // namespace hpred::planner
