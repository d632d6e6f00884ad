#include "hpred/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "hpred/dtw.hpp"
#include "hpred/error.hpp"
#include "hpred/planner.hpp"

namespace hpred::scenario {

std::string_view to_string(BehaviorMode mode) {
  switch (mode) {
    case BehaviorMode::RationalYield: return "rational-yield";
    case BehaviorMode::RationalProceed: return "rational-proceed";
    case BehaviorMode::IrrationalIgnore: return "irrational-ignore";
  }
  return "unknown";
}

BehaviorMode behavior_from_string(std::string_view name) {
  for (auto m : {BehaviorMode::RationalYield, BehaviorMode::RationalProceed,
                 BehaviorMode::IrrationalIgnore}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown behavior mode '" + std::string(name) + "'");
}

bool is_rational(BehaviorMode mode) { return mode != BehaviorMode::IrrationalIgnore; }

void validate(const ScenarioSpec& spec) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(spec.ego_speed) || !finite(spec.pred_speed) || spec.ego_speed < 0.0 ||
      spec.pred_speed < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "speeds must be finite and >= 0");
  }
  if (!finite(spec.ego_gap) || !finite(spec.pred_gap) || spec.ego_gap <= 0.0 ||
      spec.pred_gap <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "gaps must be finite and > 0");
  }
  if (!finite(spec.noise) || spec.noise < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "noise must be >= 0");
  }
  if (spec.surround < 0 || spec.surround > 2) {
    throw Error(ErrorCode::InvalidArgument, "surround must be in 0..2");
  }
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  return {{"id", spec.id},
          {"ego_speed", spec.ego_speed},
          {"pred_speed", spec.pred_speed},
          {"ego_gap", spec.ego_gap},
          {"pred_gap", spec.pred_gap},
          {"mode", std::string(to_string(spec.mode))},
          {"noise", spec.noise},
          {"seed", spec.seed},
          {"surround", spec.surround}};
}

ScenarioSpec spec_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  try {
    s.id = j.value("id", s.id);
    s.ego_speed = j.value("ego_speed", s.ego_speed);
    s.pred_speed = j.value("pred_speed", s.pred_speed);
    s.ego_gap = j.value("ego_gap", s.ego_gap);
    s.pred_gap = j.value("pred_gap", s.pred_gap);
    s.mode = behavior_from_string(j.value("mode", std::string(to_string(s.mode))));
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    s.surround = j.value("surround", s.surround);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("scenario spec: ") + e.what());
  }
  validate(s);
  return s;
}

std::vector<ReferencePath> interaction_paths() {
  // Entry lane heading -x through (20, 0); arc counterclockwise around the
  // origin. Vertices are offset half a degree so the crossing falls inside
  // a segment.
  const ReferencePath entry(kEntryPathId, {{70.0, 0.0}, {-10.0, 0.0}});
  std::vector<CartesianPoint> arc;
  for (int k = 0; k <= 225; ++k) {
    const double deg = -134.5 + k;
    const double rad = deg * std::numbers::pi / 180.0;
    arc.push_back({kRingRadius * std::cos(rad), kRingRadius * std::sin(rad)});
  }
  const ReferencePath ring(kRingPathId, std::move(arc));
  auto anchored = anchor_at_cross_point(entry, ring);
  return {anchored.a, anchored.b};
}

double yield_deceleration(double speed, double gap, double stop_margin, double max_decel) {
  const double room = gap - stop_margin;
  if (room <= 1e-9) return max_decel;
  return std::min(max_decel, speed * speed / (2.0 * room));
}

namespace {

Trajectory constant_speed_history(double current_s, double speed, const std::string& path_id) {
  Trajectory t{{}, kDt, path_id};
  for (std::size_t k = 0; k < kHistoryStates; ++k) {
    const double back = static_cast<double>(kHistoryStates - 1 - k) * kDt;
    t.states.push_back({current_s - speed * back, 0.0});
  }
  return t;
}

Trajectory future_with_decel(const Trajectory& history, double speed, double decel) {
  return planner::rollout(planner::InitialState{history.back(), speed},
                          planner::ControlSequence::constant(kFutureStates, -decel),
                          planner::KinematicModel{kDt}, history.path_id);
}

void require_fits(const Trajectory& t, const ReferencePath& path, const std::string& what) {
  for (const auto& f : t.states) {
    if (!on_path(f, path)) {
      throw Error(ErrorCode::InfeasibleSpec, what + " does not fit on path '" + path.id() + "'");
    }
  }
}

void add_noise(Trajectory& t, std::normal_distribution<double>& noise, std::mt19937_64& rng) {
  for (auto& f : t.states) {
    f.s += noise(rng);
    f.d += noise(rng);
  }
}

}  // namespace

Scene generate_scene(const ScenarioSpec& spec) {
  validate(spec);
  Scene scene;
  scene.id = spec.id;
  scene.paths = interaction_paths();
  const auto& entry = scene.paths[0];
  const auto& ring = scene.paths[1];
  scene.pred_candidates = {kRingPathId};
  scene.ego_candidates = {kEntryPathId};

  scene.pred_history = constant_speed_history(-spec.pred_gap, spec.pred_speed, kRingPathId);
  scene.ego_history = constant_speed_history(-spec.ego_gap, spec.ego_speed, kEntryPathId);
  const double decel = spec.mode == BehaviorMode::RationalYield
                           ? yield_deceleration(spec.pred_speed, spec.pred_gap)
                           : 0.0;
  scene.pred_future = future_with_decel(scene.pred_history, spec.pred_speed, decel);
  scene.ego_future = future_with_decel(scene.ego_history, spec.ego_speed, 0.0);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> gap(10.0, 16.0);
  std::uniform_real_distribution<double> speed_jitter(-0.5, 0.5);
  for (int i = 0; i < spec.surround; ++i) {
    // Passive followers: one behind the ego, one behind the predicted vehicle.
    const bool behind_ego = i == 0;
    const double lead_s = behind_ego ? -spec.ego_gap : -spec.pred_gap;
    const double lead_v = behind_ego ? spec.ego_speed : spec.pred_speed;
    const double s = lead_s - gap(rng);
    const double v = std::max(0.0, lead_v + speed_jitter(rng));
    scene.surr_histories.push_back(
        constant_speed_history(s, v, behind_ego ? kEntryPathId : kRingPathId));
  }

  require_fits(scene.pred_history, ring, "predicted-vehicle history");
  require_fits(*scene.pred_future, ring, "predicted-vehicle future");
  require_fits(scene.ego_history, entry, "ego history");
  require_fits(*scene.ego_future, entry, "ego future");
  for (const auto& surr : scene.surr_histories) {
    require_fits(surr, scene.path(surr.path_id), "surrounding-vehicle history");
  }

  // Observation noise on the histories; recorded futures stay exact so they
  // remain valid demonstrations of the control laws.
  if (spec.noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise);
    add_noise(scene.pred_history, noise, rng);
    add_noise(scene.ego_history, noise, rng);
    for (auto& surr : scene.surr_histories) add_noise(surr, noise, rng);
  }
  validate(scene);
  return scene;
}

bool futures_collide(const Scene& scene) {
  if (!scene.pred_future || !scene.ego_future) {
    throw Error(ErrorCode::InvalidArgument, "scene has no recorded futures");
  }
  const auto& pp = scene.pred_path();
  const auto& ep = scene.ego_path();
  const auto& pf = scene.pred_future->states;
  const auto& ef = scene.ego_future->states;
  for (std::size_t t = 0; t < std::min(pf.size(), ef.size()); ++t) {
    if (!on_path(pf[t], pp) || !on_path(ef[t], ep)) break;
    if (collision(pf[t], pp, ef[t], ep, scene.pred_footprint, scene.ego_footprint)) return true;
  }
  return false;
}

std::vector<std::size_t> Dataset::demonstration_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < train_modes.size(); ++i) {
    if (is_rational(train_modes[i])) out.push_back(i);
  }
  return out;
}

Dataset generate_dataset(const DatasetConfig& config) {
  if (config.count < 10) {
    throw Error(ErrorCode::DatasetTooSmall, "dataset needs at least 10 scenes");
  }
  if (!(config.mix >= 0.0 && config.mix <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "mix must be in [0, 1]");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must be in (0, 1)");
  }
  std::mt19937_64 rng(config.seed);
  const auto n = config.count;
  const auto n_irr = static_cast<std::size_t>(std::llround(config.mix * static_cast<double>(n)));
  std::vector<bool> irrational(n, false);
  std::fill(irrational.begin(), irrational.begin() + static_cast<std::ptrdiff_t>(n_irr), true);
  std::shuffle(irrational.begin(), irrational.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> pred_speed(5.0, 8.0);
  std::uniform_real_distribution<double> pred_gap(7.0, 13.0);
  std::uniform_real_distribution<double> ego_speed(4.0, 8.0);
  std::uniform_real_distribution<double> ego_gap(2.0, 10.0);
  std::uniform_int_distribution<int> surround(0, config.max_surround);

  std::vector<Scene> scenes;
  std::vector<BehaviorMode> modes;
  for (std::size_t i = 0; i < n; ++i) {
    const bool irr = irrational[i];
    const double p_conflict = irr ? config.irrational_conflict : config.rational_conflict;
    const bool conflict = config.force_conflict || unit(rng) < p_conflict;
    const BehaviorMode mode = irr        ? BehaviorMode::IrrationalIgnore
                              : conflict ? BehaviorMode::RationalYield
                                         : BehaviorMode::RationalProceed;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) {
        throw Error(ErrorCode::InfeasibleSpec, "could not place scene " + std::to_string(i));
      }
      ScenarioSpec spec;
      spec.id = "s" + std::to_string(i);
      spec.pred_speed = pred_speed(rng);
      spec.pred_gap = pred_gap(rng);
      spec.ego_speed = ego_speed(rng);
      spec.ego_gap = ego_gap(rng);
      spec.surround = surround(rng);
      spec.seed = rng();
      spec.noise = 0.0;
      spec.mode = BehaviorMode::IrrationalIgnore;
      // Classify the geometry by whether constant speeds collide.
      if (futures_collide(generate_scene(spec)) != conflict) continue;
      spec.mode = mode;
      spec.noise = config.noise;
      auto scene = generate_scene(spec);
      const bool hits = futures_collide(scene);
      if (is_rational(mode) && hits) continue;
      if (mode == BehaviorMode::IrrationalIgnore && conflict && !hits) continue;
      scenes.push_back(std::move(scene));
      modes.push_back(mode);
      break;
    }
  }

  Dataset out;
  const auto n_train =
      static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    auto& scenes_out = i < n_train ? out.train : out.test;
    auto& modes_out = i < n_train ? out.train_modes : out.test_modes;
    scenes_out.push_back(std::move(scenes[i]));
    modes_out.push_back(modes[i]);
  }
  return out;
}

std::vector<Scene> corner_case_suite() {
  // Predicted vehicle at 7 m/s, 9.5 m before the crossing. The ego starts
  // its history 12 m before the crossing in every scene.
  constexpr double kEgoStartGap = 12.0;
  constexpr double kHistorySpan = (kHistoryStates - 1) * kDt;
  std::vector<Scene> out;
  for (double v : kCornerSpeeds) {
    ScenarioSpec spec;
    spec.id = "corner_" + std::to_string(static_cast<int>(v));
    spec.ego_speed = v;
    spec.ego_gap = kEgoStartGap - v * kHistorySpan;
    spec.pred_speed = 7.0;
    spec.pred_gap = 9.5;
    spec.noise = 0.0;
    auto scene = generate_scene(spec);
    // Only the ego's constant-speed plan is known.
    scene.pred_future.reset();
    out.push_back(std::move(scene));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kSceneColumns[] = {"scene_id", "t", "vehicle_id", "role", "x", "y"};

void write_rows(std::ostream& out, const std::string& scene_id, const std::string& vehicle,
                const std::string& role, const Trajectory& t, const ReferencePath& path,
                bool future) {
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double time = future ? static_cast<double>(k + 1) * t.dt
                               : -static_cast<double>(t.size() - 1 - k) * t.dt;
    const auto p = to_cartesian(t.states[k], path);
    out << scene_id << ',' << time << ',' << vehicle << ',' << role << ',' << p.x << ',' << p.y
        << '\n';
  }
}

void check_field(const std::string& v, const std::string& what) {
  if (v.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::SchemaError, what + " '" + v + "' contains a separator");
  }
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + " column " + column +
                                            ": not a number: '" + cell + "'");
  }
}

std::map<std::string, std::size_t> read_header(std::istream& in,
                                               std::span<const char* const> required) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "row 1: missing header");
  const auto cells = split_row(strip_cr(line));
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i]] = i;
  for (const char* name : required) {
    if (!index.contains(name)) {
      throw Error(ErrorCode::SchemaError, std::string("row 1: missing column '") + name + "'");
    }
  }
  return index;
}

struct VehicleRows {
  std::string role;
  std::vector<std::pair<double, CartesianPoint>> samples;  // (t, position)
};

struct SceneRows {
  std::vector<std::string> vehicle_order;
  std::map<std::string, VehicleRows> vehicles;
};

Trajectory frenet_of(const std::vector<CartesianPoint>& pts, double dt, const ReferencePath& path) {
  Trajectory t{{}, dt, path.id()};
  for (const auto& p : pts) t.states.push_back(project_to_frenet(p, path));
  return t;
}

}  // namespace

void export_csv(const std::vector<Scene>& scenes, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << "scene_id,t,vehicle_id,role,x,y\n";
  for (const auto& scene : scenes) {
    check_field(scene.id, "scene id");
    write_rows(out, scene.id, "pred", "pred", scene.pred_history, scene.pred_path(), false);
    if (scene.pred_future) {
      write_rows(out, scene.id, "pred", "pred", *scene.pred_future, scene.pred_path(), true);
    }
    write_rows(out, scene.id, "ego", "ego", scene.ego_history, scene.ego_path(), false);
    if (scene.ego_future) {
      write_rows(out, scene.id, "ego", "ego", *scene.ego_future, scene.ego_path(), true);
    }
    for (std::size_t i = 0; i < scene.surr_histories.size(); ++i) {
      const auto& s = scene.surr_histories[i];
      write_rows(out, scene.id, "surr" + std::to_string(i), "surr", s, scene.path(s.path_id), false);
    }
  }
  out.flags(flags);
  out.precision(precision);
}

std::vector<Scene> import_csv(std::istream& in, const std::vector<ReferencePath>& paths) {
  if (paths.empty()) throw Error(ErrorCode::InvalidArgument, "import needs at least one path");
  const auto col = read_header(in, kSceneColumns);
  std::vector<std::string> scene_order;
  std::map<std::string, SceneRows> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() < col.size()) {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + ": expected " +
                                              std::to_string(col.size()) + " columns, got " +
                                              std::to_string(cells.size()));
    }
    const auto cell = [&](const char* name) -> const std::string& { return cells[col.at(name)]; };
    const std::string& sid = cell("scene_id");
    const std::string& vid = cell("vehicle_id");
    const std::string& role = cell("role");
    if (role != "ego" && role != "pred" && role != "surr") {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) +
                                              " column role: expected ego|pred|surr, got '" +
                                              role + "'");
    }
    const double t = parse_number(cell("t"), row, "t");
    const CartesianPoint p{parse_number(cell("x"), row, "x"), parse_number(cell("y"), row, "y")};
    if (!rows.contains(sid)) scene_order.push_back(sid);
    auto& scene = rows[sid];
    if (!scene.vehicles.contains(vid)) {
      scene.vehicle_order.push_back(vid);
      scene.vehicles[vid].role = role;
    } else if (scene.vehicles[vid].role != role) {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) +
                                              " column role: vehicle '" + vid + "' changes role");
    }
    scene.vehicles[vid].samples.emplace_back(t, p);
  }

  std::vector<Scene> out;
  for (const auto& sid : scene_order) {
    const auto& srows = rows[sid];
    Scene scene;
    scene.id = sid;
    scene.paths = paths;
    double dt = 0.0;
    for (const auto& vid : srows.vehicle_order) {
      auto samples = srows.vehicles.at(vid).samples;
      std::stable_sort(samples.begin(), samples.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<CartesianPoint> past, future;
      for (const auto& [t, p] : samples) (t <= 1e-9 ? past : future).push_back(p);
      if (past.size() < 2) {
        throw Error(ErrorCode::SchemaError, "scene '" + sid + "' vehicle '" + vid +
                                                "': history needs at least 2 rows with t <= 0");
      }
      const double step = samples[1].first - samples[0].first;
      if (!(step > 0.0)) {
        throw Error(ErrorCode::SchemaError, "scene '" + sid + "' vehicle '" + vid +
                                                "': timestamps must increase");
      }
      // Round to microseconds so the recovered dt is the exported one.
      dt = std::round(step * 1e6) / 1e6;
      const auto likelihoods = path_likelihoods(past, paths);
      const auto& path = scene.path(likelihoods.most_likely());
      auto history = frenet_of(past, dt, path);
      const auto& role = srows.vehicles.at(vid).role;
      if (role == "pred") {
        scene.pred_history = std::move(history);
        if (!future.empty()) scene.pred_future = frenet_of(future, dt, path);
      } else if (role == "ego") {
        scene.ego_history = std::move(history);
        if (!future.empty()) scene.ego_future = frenet_of(future, dt, path);
      } else {
        scene.surr_histories.push_back(std::move(history));
      }
    }
    if (scene.pred_history.size() == 0 || scene.ego_history.size() == 0) {
      throw Error(ErrorCode::SchemaError, "scene '" + sid + "' needs one pred and one ego vehicle");
    }
    scene.pred_candidates = {scene.pred_history.path_id};
    scene.ego_candidates = {scene.ego_history.path_id};
    validate(scene);
    out.push_back(std::move(scene));
  }
  return out;
}

void export_paths(const std::vector<ReferencePath>& paths, std::ostream& csv,
                  nlohmann::json& sidecar) {
  const auto flags = csv.flags();
  const auto precision = csv.precision();
  csv << std::setprecision(17) << "path_id,vertex_index,x,y\n";
  sidecar = {{"paths", nlohmann::json::array()}};
  for (const auto& path : paths) {
    check_field(path.id(), "path id");
    for (std::size_t i = 0; i < path.vertices().size(); ++i) {
      csv << path.id() << ',' << i << ',' << path.vertices()[i].x << ',' << path.vertices()[i].y
          << '\n';
    }
    sidecar["paths"].push_back({{"id", path.id()},
                                {"origin_arc_length", path.origin_arc_length()},
                                {"corridor_half_width", path.corridor_half_width()}});
  }
  csv.flags(flags);
  csv.precision(precision);
}

std::vector<ReferencePath> import_paths(std::istream& csv, const nlohmann::json& sidecar) {
  static constexpr const char* kColumns[] = {"path_id", "vertex_index", "x", "y"};
  const auto col = read_header(csv, kColumns);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<long, CartesianPoint>>> vertices;
  std::string line;
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() < col.size()) {
      throw Error(ErrorCode::SchemaError, "row " + std::to_string(row) + ": too few columns");
    }
    const auto& id = cells[col.at("path_id")];
    const double index = parse_number(cells[col.at("vertex_index")], row, "vertex_index");
    if (index != std::floor(index) || index < 0) {
      throw Error(ErrorCode::SchemaError,
                  "row " + std::to_string(row) + " column vertex_index: not a non-negative integer");
    }
    if (!vertices.contains(id)) order.push_back(id);
    vertices[id].emplace_back(static_cast<long>(index),
                              CartesianPoint{parse_number(cells[col.at("x")], row, "x"),
                                             parse_number(cells[col.at("y")], row, "y")});
  }

  std::map<std::string, nlohmann::json> meta;
  try {
    for (const auto& p : sidecar.at("paths")) meta[p.at("id").get<std::string>()] = p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("path sidecar: ") + e.what());
  }
  std::vector<ReferencePath> out;
  for (const auto& id : order) {
    auto& vs = vertices[id];
    std::stable_sort(vs.begin(), vs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<CartesianPoint> pts;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (vs[i].first != static_cast<long>(i)) {
        throw Error(ErrorCode::SchemaError, "path '" + id + "': vertex indices are not 0..n-1");
      }
      pts.push_back(vs[i].second);
    }
    double origin = 0.0;
    double corridor = ReferencePath::kDefaultCorridorHalfWidth;
    if (meta.contains(id)) {
      origin = meta[id].value("origin_arc_length", origin);
      corridor = meta[id].value("corridor_half_width", corridor);
    }
    out.emplace_back(id, std::move(pts), origin, corridor);
  }
  return out;
}

}  // namespace hpred::scenario
