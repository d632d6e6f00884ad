#include "hpred/scene.hpp"

#include <cmath>

#include "hpred/error.hpp"

namespace hpred {

const ReferencePath& Scene::path(std::string_view path_id) const {
  for (const auto& p : paths) {
    if (p.id() == path_id) return p;
  }
  throw Error(ErrorCode::InvalidArgument,
              "scene '" + id + "' has no path '" + std::string(path_id) + "'");
}

void validate(const Scene& scene) {
  validate(scene.pred_history);
  validate(scene.ego_history);
  const double dt = scene.pred_history.dt;
  auto check = [&](const Trajectory& t, const char* what) {
    validate(t);
    if (std::abs(t.dt - dt) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " dt differs from pred history");
    }
    (void)scene.path(t.path_id);
  };
  check(scene.pred_history, "pred history");
  check(scene.ego_history, "ego history");
  if (scene.ego_history.size() != scene.pred_history.size()) {
    throw Error(ErrorCode::InvalidArgument, "pred and ego histories differ in length");
  }
  for (const auto& s : scene.surr_histories) {
    check(s, "surrounding history");
    if (s.size() != scene.pred_history.size()) {
      throw Error(ErrorCode::InvalidArgument, "surrounding history length differs");
    }
  }
  if (scene.pred_future) check(*scene.pred_future, "pred future");
  if (scene.ego_future) check(*scene.ego_future, "ego future");
}

double current_speed(const Trajectory& history) {
  if (history.size() < 2) {
    throw Error(ErrorCode::InsufficientHistory, "need at least 2 history states for a speed");
  }
  const auto& a = history.states[history.size() - 2];
  const auto& b = history.states.back();
  return (b.s - a.s) / history.dt;
}

Trajectory constant_velocity_future(const Trajectory& history, std::size_t count) {
  const double v = current_speed(history);
  Trajectory out{{}, history.dt, history.path_id};
  const auto last = history.back();
  for (std::size_t k = 1; k <= count; ++k) {
    out.states.push_back({last.s + v * history.dt * static_cast<double>(k), last.d});
  }
  return out;
}

double mean_state_error(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "trajectories differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += std::hypot(a.states[i].s - b.states[i].s, a.states[i].d - b.states[i].d);
  }
  return total / static_cast<double>(a.size());
}

}  // namespace hpred
