#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hpred/error.hpp"
#include "hpred/experiment.hpp"
#include "hpred/manifest.hpp"
#include "hpred/planner.hpp"
#include "hpred/scenario.hpp"
#include "hpred/svg.hpp"

namespace hpred::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kHorizons[] = {0.2, 0.4, 0.6, 0.8, 1.0};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string read_file(const fs::path& file, ErrorCode missing) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(missing, "cannot read " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& file, ErrorCode missing) {
  try {
    return json::parse(read_file(file, missing));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, file.string() + ": " + e.what());
  }
}

void write_file(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
}

// Identifies the config sections an artifact depends on, so a cached default
// artifact built under other settings is rebuilt instead of reused.
std::string config_key(const RunConfig& c, std::initializer_list<const char*> sections) {
  const auto full = to_json(c);
  json key = {{"seed", c.seed}};
  for (const char* s : sections) key[s] = full.at(s);
  return manifest::git_blob_hash(key.dump());
}

class Run {
 public:
  Run(const RunConfig& config, std::string command) : config_(config), out_(config.output_dir) {
    manifest_.command = std::move(command);
    manifest_.seed = config.seed;
    manifest_.config = to_json(config);
    fs::create_directories(out_);
  }

  const RunConfig& config() const { return config_; }
  const fs::path& out() const { return out_; }

  void output(const fs::path& file, const std::string& content) {
    write_file(file, content);
    manifest_.add_output(file);
  }
  void input(const fs::path& file) { manifest_.add_input(file); }

  void finish() {
    const auto file = out_ / ("manifest-" + manifest_.command + ".json");
    write_file(file, manifest_.to_json().dump(2) + "\n");
  }

  // Artifacts, loaded from disk or built on demand.
  const scenario::Dataset& dataset();
  const cvae::CvaeModel& model();
  const irl::CostWeights& weights();

  fs::path data_dir() const { return config_.data_dir ? fs::path(*config_.data_dir) : out_ / "data"; }
  fs::path model_file() const {
    return config_.cvae_model ? fs::path(*config_.cvae_model) : out_ / "cvae_model.json";
  }
  fs::path weights_file() const {
    return config_.cost_weights ? fs::path(*config_.cost_weights) : out_ / "cost_weights.json";
  }

  void write_dataset(const scenario::Dataset& ds);
  cvae::CvaeModel build_model();
  irl::CostWeights build_weights();

 private:
  const RunConfig& config_;
  fs::path out_;
  manifest::RunManifest manifest_;
  std::optional<scenario::Dataset> dataset_;
  std::optional<cvae::CvaeModel> model_;
  std::optional<irl::CostWeights> weights_;
};

constexpr const char* kDatasetFiles[] = {"train.csv", "test.csv", "modes.csv", "paths.csv",
                                         "paths.json", "dataset.json"};

scenario::DatasetConfig dataset_config(const RunConfig& c) {
  auto d = c.data;
  d.seed = c.seed;
  return d;
}

void Run::write_dataset(const scenario::Dataset& ds) {
  const auto dir = data_dir();
  std::ostringstream train, test, modes, paths;
  scenario::export_csv(ds.train, train);
  scenario::export_csv(ds.test, test);
  modes << "scene_id,split,mode\n";
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    modes << ds.train[i].id << ",train," << scenario::to_string(ds.train_modes[i]) << '\n';
  }
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    modes << ds.test[i].id << ",test," << scenario::to_string(ds.test_modes[i]) << '\n';
  }
  json sidecar;
  scenario::export_paths(scenario::interaction_paths(), paths, sidecar);
  output(dir / "train.csv", train.str());
  output(dir / "test.csv", test.str());
  output(dir / "modes.csv", modes.str());
  output(dir / "paths.csv", paths.str());
  output(dir / "paths.json", sidecar.dump(2) + "\n");
  const json meta = {{"config_key", config_key(config_, {"data"})},
                     {"train", ds.train.size()},
                     {"test", ds.test.size()}};
  output(dir / "dataset.json", meta.dump(2) + "\n");
}

std::vector<std::pair<std::string, std::string>> read_modes(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "scene_id,split,mode") throw Error(ErrorCode::SchemaError, "modes.csv: bad header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) {
      throw Error(ErrorCode::SchemaError, "modes.csv row " + std::to_string(row) + ": expected 3 columns");
    }
    out.emplace_back(line.substr(0, a), line.substr(b + 1));
  }
  return out;
}

const scenario::Dataset& Run::dataset() {
  if (dataset_) return *dataset_;
  const auto dir = data_dir();
  const auto key = config_key(config_, {"data"});
  bool cached = true;
  for (const char* f : kDatasetFiles) cached = cached && fs::exists(dir / f);
  if (!config_.data_dir && cached) {
    cached = read_json(dir / "dataset.json", ErrorCode::InputNotFound).value("config_key", "") == key;
  }
  if (!cached) {
    if (config_.data_dir) {
      throw Error(ErrorCode::InputNotFound, "dataset directory " + dir.string() + " is incomplete");
    }
    spdlog::info("building dataset in {}", dir.string());
    dataset_ = scenario::generate_dataset(dataset_config(config_));
    write_dataset(*dataset_);
    return *dataset_;
  }

  spdlog::info("loading dataset from {}", dir.string());
  std::istringstream path_csv(read_file(dir / "paths.csv", ErrorCode::InputNotFound));
  const auto paths = scenario::import_paths(path_csv, read_json(dir / "paths.json", ErrorCode::InputNotFound));
  scenario::Dataset ds;
  std::istringstream train(read_file(dir / "train.csv", ErrorCode::InputNotFound));
  std::istringstream test(read_file(dir / "test.csv", ErrorCode::InputNotFound));
  ds.train = scenario::import_csv(train, paths);
  ds.test = scenario::import_csv(test, paths);
  const auto modes = read_modes(read_file(dir / "modes.csv", ErrorCode::InputNotFound));
  if (modes.size() != ds.train.size() + ds.test.size()) {
    throw Error(ErrorCode::SchemaError, "modes.csv does not match the scene files");
  }
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& scene = i < ds.train.size() ? ds.train[i] : ds.test[i - ds.train.size()];
    if (modes[i].first != scene.id) {
      throw Error(ErrorCode::SchemaError, "modes.csv: scene " + modes[i].first + " out of order");
    }
    auto& target = i < ds.train.size() ? ds.train_modes : ds.test_modes;
    target.push_back(scenario::behavior_from_string(modes[i].second));
  }
  for (const char* f : kDatasetFiles) input(dir / f);
  dataset_ = std::move(ds);
  return *dataset_;
}

cvae::CvaeModel Run::build_model() {
  const auto& ds = dataset();
  const auto data = experiment::cvae_dataset(ds.train, config_.shape);
  auto training = config_.training;
  training.seed = config_.seed;
  spdlog::info("training CVAE on {} scenes for {} epochs", ds.train.size(), training.epochs);
  auto result = cvae::train(data, training, config_.shape);
  spdlog::info("CVAE loss {:.4f} -> {:.4f}", result.epoch_losses.front(), result.epoch_losses.back());

  std::ostringstream loss;
  loss << "epoch,loss\n";
  for (std::size_t i = 0; i < result.epoch_losses.size(); ++i) {
    loss << i + 1 << ',' << fmt(result.epoch_losses[i]) << '\n';
  }
  output(out_ / "cvae_loss.csv", loss.str());

  const json file = {{"config_key", config_key(config_, {"data", "cvae"})},
                     {"model", cvae::to_json(result.model)}};
  output(model_file(), file.dump() + "\n");
  model_ = std::move(result.model);
  return *model_;
}

const cvae::CvaeModel& Run::model() {
  if (model_) return *model_;
  const auto file = model_file();
  const auto key = config_key(config_, {"data", "cvae"});
  if (!fs::exists(file)) {
    if (config_.cvae_model) throw Error(ErrorCode::ModelNotFound, "CVAE model " + file.string() + " not found");
    build_model();
    return *model_;
  }
  const auto j = read_json(file, ErrorCode::ModelNotFound);
  if (!config_.cvae_model && j.value("config_key", "") != key) {
    spdlog::info("cached CVAE model was built under other settings; retraining");
    build_model();
    return *model_;
  }
  if (!j.contains("model")) throw Error(ErrorCode::SchemaError, file.string() + ": no model");
  model_ = cvae::model_from_json(j.at("model"));
  input(file);
  return *model_;
}

irl::CostWeights Run::build_weights() {
  const auto& ds = dataset();
  const auto indices = ds.demonstration_indices();
  const auto demos = experiment::demonstrations(ds.train, indices);
  spdlog::info("training IRL on {} demonstrations", demos.size());
  const auto result = irl::train_irl(demos, config_.irl);
  spdlog::info("IRL converged={} after {} iterations", result.converged, result.iterations);

  std::ostringstream curve;
  curve << "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < result.likelihood_curve.size(); ++i) {
    curve << i << ',' << fmt(result.likelihood_curve[i]) << '\n';
  }
  output(out_ / "irl_likelihood.csv", curve.str());

  const json file = {{"config_key", config_key(config_, {"data", "irl"})},
                     {"weights", irl::to_json(result.weights)},
                     {"scale", result.scale},
                     {"iterations", result.iterations},
                     {"converged", result.converged},
                     {"demonstrations", demos.size()}};
  output(weights_file(), file.dump(2) + "\n");
  weights_ = result.weights;
  return *weights_;
}

const irl::CostWeights& Run::weights() {
  if (weights_) return *weights_;
  const auto file = weights_file();
  const auto key = config_key(config_, {"data", "irl"});
  if (!fs::exists(file)) {
    if (config_.cost_weights) throw Error(ErrorCode::ModelNotFound, "cost weights " + file.string() + " not found");
    build_weights();
    return *weights_;
  }
  const auto j = read_json(file, ErrorCode::ModelNotFound);
  if (!config_.cost_weights && j.value("config_key", "") != key) {
    spdlog::info("cached cost weights were built under other settings; retraining");
    build_weights();
    return *weights_;
  }
  if (!j.contains("weights")) throw Error(ErrorCode::SchemaError, file.string() + ": no weights");
  weights_ = irl::weights_from_json(j.at("weights"));
  input(file);
  return *weights_;
}

Scene corner_scene(double ego_speed) {
  const auto suite = scenario::corner_case_suite();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (scenario::kCornerSpeeds[i] == ego_speed) return suite[i];
  }
  throw Error(ErrorCode::ConfigError, "no corner scene with ego speed " + fmt(ego_speed));
}

std::vector<Scene> load_scenes(Run& run) {
  const auto& c = run.config();
  if (!c.scene_file) return {corner_scene(c.sweep_ego_speed)};
  std::vector<ReferencePath> paths = scenario::interaction_paths();
  if (c.path_file) {
    const fs::path csv(*c.path_file);
    auto sidecar_file = csv;
    sidecar_file.replace_extension(".json");
    std::istringstream in(read_file(csv, ErrorCode::InputNotFound));
    paths = scenario::import_paths(in, read_json(sidecar_file, ErrorCode::InputNotFound));
    run.input(csv);
    run.input(sidecar_file);
  }
  std::istringstream in(read_file(*c.scene_file, ErrorCode::InputNotFound));
  auto scenes = scenario::import_csv(in, paths);
  run.input(*c.scene_file);
  if (scenes.empty()) throw Error(ErrorCode::SchemaError, *c.scene_file + ": no scenes");
  return scenes;
}

// Cartesian points of the on-path prefix of a trajectory.
std::vector<CartesianPoint> polyline(const Trajectory& t, const ReferencePath& path) {
  std::vector<CartesianPoint> out;
  for (const auto& f : t.states) {
    if (!on_path(f, path)) break;
    out.push_back(to_cartesian(f, path));
  }
  return out;
}

std::vector<std::vector<CartesianPoint>> polylines(std::span<const Trajectory> ts,
                                                   const ReferencePath& path) {
  std::vector<std::vector<CartesianPoint>> out;
  for (const auto& t : ts) out.push_back(polyline(t, path));
  return out;
}

std::vector<Trajectory> preds_of(std::span<const pipeline::SamplePair> pairs) {
  std::vector<Trajectory> out;
  for (const auto& p : pairs) out.push_back(p.pred);
  return out;
}

std::vector<Trajectory> egos_of(std::span<const pipeline::SamplePair> pairs) {
  std::vector<Trajectory> out;
  for (const auto& p : pairs) out.push_back(p.ego);
  return out;
}

void write_rmse(Run& run) {
  const auto& c = run.config();
  const auto report = experiment::evaluate_rmse(run.dataset().test, run.model(), c.rmse_samples,
                                                c.seed, c.rmse_reduction);
  std::ostringstream csv;
  csv << "horizon_s,role,rmse,std\n";
  const std::pair<const char*, const metrics::HorizonRmse*> rows[] = {
      {"pred", &report.pred}, {"ego", &report.ego}, {"pred_constant_velocity", &report.pred_constant_velocity}};
  std::vector<svg::Series> series;
  for (const auto& [role, h] : rows) {
    svg::Series s{role, {}, {}, {}};
    for (std::size_t i = 0; i < h->rmse.size(); ++i) {
      const double t = static_cast<double>(i + 1) * c.shape.dt;
      csv << fmt(t) << ',' << role << ',' << fmt(h->rmse[i]) << ',' << fmt(h->std[i]) << '\n';
      s.x.push_back(t);
      s.y.push_back(h->rmse[i]);
      s.error.push_back(h->std[i]);
    }
    series.push_back(std::move(s));
  }
  run.output(run.out() / "cvae_rmse.csv", csv.str());
  run.output(run.out() / "cvae_rmse.svg",
             svg::line_chart(series, {"Prediction RMSE on held-out scenes", "horizon (s)", "RMSE (m)"}));
  std::printf("pred RMSE at %.1f s: %.3f m (constant velocity %.3f m)\n", kHorizons[4],
              report.pred.rmse.back(), report.pred_constant_velocity.rmse.back());
}

}  // namespace

RunConfig resolve_config(const Overrides& o) {
  RunConfig c;
  if (!o.config_file.empty()) {
    json j;
    try {
      j = json::parse(read_file(o.config_file, ErrorCode::InputNotFound));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, o.config_file + ": " + e.what());
    }
    c = config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.force_ratio) c.pipeline.forced_ratio = *o.force_ratio;
  if (o.pure_learned) c.pipeline.pure_learned = true;
  validate(c);
  return c;
}

void gen_data(const RunConfig& config) {
  Run run(config, "gen-data");
  const auto ds = scenario::generate_dataset(dataset_config(config));
  run.write_dataset(ds);
  std::printf("wrote %zu train and %zu test scenes to %s\n", ds.train.size(), ds.test.size(),
              run.data_dir().string().c_str());
  run.finish();
}

void train_cvae(const RunConfig& config) {
  Run run(config, "train-cvae");
  const auto model = run.build_model();
  (void)model;
  write_rmse(run);
  std::printf("wrote %s\n", run.model_file().string().c_str());
  run.finish();
}

void train_irl(const RunConfig& config) {
  Run run(config, "train-irl");
  const auto w = run.build_weights();
  std::printf("theta:");
  for (std::size_t i = 0; i < irl::kFeatureCount; ++i) {
    std::printf(" %s=%.4f", irl::kFeatureNames[i], w.theta[i]);
  }
  std::printf("\nwrote %s\n", run.weights_file().string().c_str());
  run.finish();
}

void predict(const RunConfig& config) {
  Run run(config, "predict");
  const auto scenes = load_scenes(run);
  const auto& model = run.model();
  const auto& weights = run.weights();
  const auto pc = config.resolved_pipeline();
  const auto initial = pipeline::RatioState::from_ratio(config.hybrid_ratio);

  std::ostringstream preds, summary;
  preds << "scene_id,set,sample,step,t,s,d,x,y\n";
  summary << "scene_id,ratio,n_raw,n_satisfied,n_optimal,threshold,fallback,collision_rate,"
             "learned_only_collision_rate,next_ratio\n";
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    const auto& scene = scenes[k];
    std::mt19937_64 rng(config.seed + k);
    const auto step = pipeline::predict_step(scene, model, weights, initial, pc, rng);
    const auto& d = step.diagnostics;
    const auto& path = scene.pred_path();
    const auto emit = [&](const char* set, const std::vector<Trajectory>& ts) {
      for (std::size_t i = 0; i < ts.size(); ++i) {
        for (std::size_t t = 0; t < ts[i].size(); ++t) {
          const auto& f = ts[i].states[t];
          std::string xy = ",,";
          if (on_path(f, path)) {
            const auto p = to_cartesian(f, path);
            xy = "," + fmt(p.x) + "," + fmt(p.y);
          }
          preds << scene.id << ',' << set << ',' << i << ',' << t + 1 << ','
                << fmt(static_cast<double>(t + 1) * ts[i].dt) << ',' << fmt(f.s) << ','
                << fmt(f.d) << xy << '\n';
        }
      }
    };
    emit("hybrid", step.predictions);
    emit("learned_only", step.learned_only);
    summary << scene.id << ',' << fmt(d.ratio) << ',' << d.n_raw << ',' << d.n_satisfied << ','
            << d.n_optimal << ',' << fmt(d.threshold_used) << ',' << (d.fallback ? 1 : 0) << ','
            << fmt(d.collision_rate) << ',' << fmt(d.learned_only_collision_rate) << ','
            << fmt(step.ratio.ratio()) << '\n';

    const auto& ego_path = scene.ego_path();
    const auto raw_pred = preds_of(step.raw), sat_pred = preds_of(step.satisfied);
    const auto raw_ego = egos_of(step.raw), sat_ego = egos_of(step.satisfied);
    const std::vector<Trajectory> plan{step.ego_plan};
    std::vector<svg::TrajectoryPanel> panels{
        {"raw samples", polylines(raw_pred, path), polylines(raw_ego, ego_path), std::nullopt},
        {"satisfied set", polylines(sat_pred, path), polylines(sat_ego, ego_path), std::nullopt},
        {"learned-only resample", polylines(step.learned_only, path), polylines(plan, ego_path),
         d.learned_only_collision_rate},
        {"hybrid resample (r=" + fmt(d.ratio) + ")", polylines(step.predictions, path),
         polylines(plan, ego_path), d.collision_rate},
    };
    run.output(run.out() / ("predict-" + scene.id + ".svg"),
               svg::trajectory_panels(scene.paths, panels, "Scene " + scene.id));
    std::printf("%s: r=%s satisfied=%zu/%zu collision hybrid=%.2f learned-only=%.2f\n",
                scene.id.c_str(), fmt(d.ratio).c_str(), d.n_satisfied, d.n_raw, d.collision_rate,
                d.learned_only_collision_rate);
  }
  run.output(run.out() / "predictions.csv", preds.str());
  run.output(run.out() / "predict_summary.csv", summary.str());
  run.finish();
}

void sweep(const RunConfig& config) {
  Run run(config, "sweep");
  const auto scene = corner_scene(config.sweep_ego_speed);
  const auto result = experiment::sweep_ratio(scene, config.sweep_ratios, config.sweep_repeats,
                                              run.model(), run.weights(),
                                              config.resolved_pipeline(), config.seed);
  std::ostringstream csv;
  csv << "ratio,mean,std";
  for (std::size_t j = 0; j < config.sweep_repeats; ++j) csv << ",rate_" << j;
  csv << '\n';
  svg::Series s{"collision rate", {}, {}, {}};
  for (const auto& p : result.points) {
    csv << fmt(p.ratio) << ',' << fmt(p.mean) << ',' << fmt(p.std);
    for (double r : p.rates) csv << ',' << fmt(r);
    csv << '\n';
    s.x.push_back(p.ratio);
    s.y.push_back(p.mean);
    s.error.push_back(p.std);
    std::printf("r=%-5s collision rate %.3f +- %.3f\n", fmt(p.ratio).c_str(), p.mean, p.std);
  }
  run.output(run.out() / "sweep.csv", csv.str());
  run.output(run.out() / "sweep.svg",
             svg::line_chart({s}, {"Weight ratio versus collision rate (" + scene.id + ")",
                                   "weight ratio r", "collision rate"}));
  if (result.points.size() >= 2) std::printf("spearman %.3f\n", experiment::sweep_trend(result));
  run.finish();
}

void corner_cases(const RunConfig& config) {
  Run run(config, "corner-cases");
  const auto suite = scenario::corner_case_suite();
  auto pc = config.resolved_pipeline();
  if (!pc.forced_ratio && !pc.pure_learned) pc.forced_ratio = config.hybrid_ratio;
  const auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0, q = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) q += (x - m) * (x - m);
    return std::pair{m, v.size() > 1 ? std::sqrt(q / static_cast<double>(v.size() - 1)) : 0.0};
  };
  std::ostringstream csv;
  csv << "scene_id,ego_speed,feasible,repeats,ratio,learned_only_mean,learned_only_std,"
         "hybrid_mean,hybrid_std\n";
  svg::Series learned{"learned-only", {}, {}, {}}, hybrid{"hybrid", {}, {}, {}};
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& scene = suite[i];
    std::vector<double> lo, hy;
    double ratio = 0.0;
    // Repeat j uses seed + j for every scene, as the sweep does.
    for (std::size_t j = 0; j < config.sweep_repeats; ++j) {
      std::mt19937_64 rng(config.seed + j);
      const auto step = pipeline::predict_step(scene, run.model(), run.weights(), {}, pc, rng);
      lo.push_back(step.diagnostics.learned_only_collision_rate);
      hy.push_back(step.diagnostics.collision_rate);
      ratio = step.diagnostics.ratio;
    }
    const auto [lm, ls] = mean_std(lo);
    const auto [hm, hs] = mean_std(hy);
    const bool feasible = planner::constant_decel_feasible(scene);
    const double v = scenario::kCornerSpeeds[i];
    csv << scene.id << ',' << fmt(v) << ',' << (feasible ? "true" : "false") << ','
        << config.sweep_repeats << ',' << fmt(ratio) << ',' << fmt(lm) << ',' << fmt(ls) << ','
        << fmt(hm) << ',' << fmt(hs) << '\n';
    learned.x.push_back(v);
    learned.y.push_back(lm);
    learned.error.push_back(ls);
    hybrid.x.push_back(v);
    hybrid.y.push_back(hm);
    hybrid.error.push_back(hs);
    std::printf("%s ego %.0f m/s feasible=%s learned-only=%.3f hybrid=%.3f\n", scene.id.c_str(),
                v, feasible ? "true" : "false", lm, hm);
  }
  run.output(run.out() / "corner_cases.csv", csv.str());
  run.output(run.out() / "corner_cases.svg",
             svg::line_chart({learned, hybrid},
                             {"Corner cases", "ego speed (m/s)", "collision rate"}));
  run.finish();
}

}  // namespace hpred::app
