#include "hpred/config.hpp"

#include <cmath>
#include <set>

#include "hpred/error.hpp"

namespace hpred {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object section and rejects any it does not
// know about.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigError, where("") + "must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, where(key) + e.what());
    }
  }

  void read_optional(const char* key, std::optional<std::string>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    std::string v;
    read(key, v);
    out = v;
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    double v = 0.0;
    read(key, v);
    out = v;
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), name_.empty() ? key : name_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + qualified(key) + "'");
    }
  }

  std::string where(const std::string& key) const {
    return "config key '" + qualified(key) + "': ";
  }

 private:
  std::string qualified(const std::string& key) const {
    if (name_.empty()) return key;
    return key.empty() ? name_ : name_ + "." + key;
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

const char* discrepancy_name(pipeline::Discrepancy d) {
  return d == pipeline::Discrepancy::FinalState ? "final_state" : "trajectory_rmse";
}

const char* reduction_name(metrics::SampleReduction r) {
  return r == metrics::SampleReduction::BestOfSamples ? "best_of_samples" : "mean_over_samples";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

pipeline::PipelineConfig RunConfig::resolved_pipeline() const {
  auto p = pipeline;
  p.planner = planner;
  p.planner.features = irl.features;
  p.planner.horizon = shape.future_states;
  p.features = irl.features;
  return p;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);

  if (auto s = root.child("data")) {
    s->read("count", c.data.count);
    s->read("mix", c.data.mix);
    s->read("noise", c.data.noise);
    s->read("train_fraction", c.data.train_fraction);
    s->read("rational_conflict", c.data.rational_conflict);
    s->read("irrational_conflict", c.data.irrational_conflict);
    s->read("force_conflict", c.data.force_conflict);
    s->read("max_surround", c.data.max_surround);
    s->finish();
  }
  if (auto s = root.child("cvae")) {
    s->read("latent", c.shape.latent);
    s->read("hidden", c.shape.hidden);
    s->read("beta", c.training.beta);
    s->read("epochs", c.training.epochs);
    s->read("batch_size", c.training.batch_size);
    s->read("learning_rate", c.training.learning_rate);
    s->finish();
  }
  if (auto s = root.child("irl")) {
    s->read("max_iterations", c.irl.max_iterations);
    s->read("gradient_tolerance", c.irl.gradient_tolerance);
    s->read("weight_step", c.irl.weight_step);
    s->read("initial_step", c.irl.initial_step);
    s->read("proximity_sigma", c.irl.features.proximity_sigma);
    s->finish();
  }
  if (auto s = root.child("planner")) {
    s->read("max_accel", c.planner.bounds.max_accel);
    s->read("max_lateral_rate", c.planner.bounds.max_lateral_rate);
    s->read("max_iterations", c.planner.max_iterations);
    s->read("gradient_tolerance", c.planner.gradient_tolerance);
    s->read("fd_step", c.planner.fd_step);
    s->finish();
  }
  if (auto s = root.child("pipeline")) {
    s->read("raw_samples", c.pipeline.raw_samples);
    s->read("final_samples", c.pipeline.final_samples);
    s->read("threshold", c.pipeline.threshold);
    s->read("threshold_doublings", c.pipeline.threshold_doublings);
    std::string disc = discrepancy_name(c.pipeline.discrepancy);
    s->read("discrepancy", disc);
    if (disc == "final_state") {
      c.pipeline.discrepancy = pipeline::Discrepancy::FinalState;
    } else if (disc == "trajectory_rmse") {
      c.pipeline.discrepancy = pipeline::Discrepancy::FullTrajectoryRmse;
    } else {
      throw Error(ErrorCode::ConfigError, s->where("discrepancy") +
                                              "expected final_state or trajectory_rmse");
    }
    s->read("bandwidth", c.pipeline.bandwidth);
    s->read_optional("forced_ratio", c.pipeline.forced_ratio);
    s->read("pure_learned", c.pipeline.pure_learned);
    s->read("hybrid_ratio", c.hybrid_ratio);
    s->finish();
  }
  if (auto s = root.child("sweep")) {
    s->read("ratios", c.sweep_ratios);
    s->read("repeats", c.sweep_repeats);
    s->read("ego_speed", c.sweep_ego_speed);
    s->finish();
  }
  if (auto s = root.child("evaluation")) {
    s->read("rmse_samples", c.rmse_samples);
    std::string red = reduction_name(c.rmse_reduction);
    s->read("rmse_reduction", red);
    if (red == "best_of_samples") {
      c.rmse_reduction = metrics::SampleReduction::BestOfSamples;
    } else if (red == "mean_over_samples") {
      c.rmse_reduction = metrics::SampleReduction::MeanOverSamples;
    } else {
      throw Error(ErrorCode::ConfigError, s->where("rmse_reduction") +
                                              "expected best_of_samples or mean_over_samples");
    }
    s->finish();
  }
  if (auto s = root.child("paths")) {
    s->read_optional("data_dir", c.data_dir);
    s->read_optional("cvae_model", c.cvae_model);
    s->read_optional("cost_weights", c.cost_weights);
    s->read_optional("scene_file", c.scene_file);
    s->read_optional("path_file", c.path_file);
    s->finish();
  }
  root.finish();
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  const auto opt = [](const auto& v) -> json {
    if (v) return *v;
    return nullptr;
  };
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"data",
       {{"count", c.data.count},
        {"mix", c.data.mix},
        {"noise", c.data.noise},
        {"train_fraction", c.data.train_fraction},
        {"rational_conflict", c.data.rational_conflict},
        {"irrational_conflict", c.data.irrational_conflict},
        {"force_conflict", c.data.force_conflict},
        {"max_surround", c.data.max_surround}}},
      {"cvae",
       {{"latent", c.shape.latent},
        {"hidden", c.shape.hidden},
        {"beta", c.training.beta},
        {"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"learning_rate", c.training.learning_rate}}},
      {"irl",
       {{"max_iterations", c.irl.max_iterations},
        {"gradient_tolerance", c.irl.gradient_tolerance},
        {"weight_step", c.irl.weight_step},
        {"initial_step", c.irl.initial_step},
        {"proximity_sigma", c.irl.features.proximity_sigma}}},
      {"planner",
       {{"max_accel", c.planner.bounds.max_accel},
        {"max_lateral_rate", c.planner.bounds.max_lateral_rate},
        {"max_iterations", c.planner.max_iterations},
        {"gradient_tolerance", c.planner.gradient_tolerance},
        {"fd_step", c.planner.fd_step}}},
      {"pipeline",
       {{"raw_samples", c.pipeline.raw_samples},
        {"final_samples", c.pipeline.final_samples},
        {"threshold", c.pipeline.threshold},
        {"threshold_doublings", c.pipeline.threshold_doublings},
        {"discrepancy", discrepancy_name(c.pipeline.discrepancy)},
        {"bandwidth", c.pipeline.bandwidth},
        {"forced_ratio", opt(c.pipeline.forced_ratio)},
        {"pure_learned", c.pipeline.pure_learned},
        {"hybrid_ratio", c.hybrid_ratio}}},
      {"sweep",
       {{"ratios", c.sweep_ratios}, {"repeats", c.sweep_repeats}, {"ego_speed", c.sweep_ego_speed}}},
      {"evaluation",
       {{"rmse_samples", c.rmse_samples}, {"rmse_reduction", reduction_name(c.rmse_reduction)}}},
      {"paths",
       {{"data_dir", opt(c.data_dir)},
        {"cvae_model", opt(c.cvae_model)},
        {"cost_weights", opt(c.cost_weights)},
        {"scene_file", opt(c.scene_file)},
        {"path_file", opt(c.path_file)}}},
  };
}

void validate(const RunConfig& c) {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(!c.output_dir.empty(), "output_dir must not be empty");
  require(c.data.count >= 10, "data.count must be >= 10");
  require(c.data.mix >= 0.0 && c.data.mix <= 1.0, "data.mix must be in [0, 1]");
  require(c.data.noise >= 0.0, "data.noise must be >= 0");
  require(c.data.train_fraction > 0.0 && c.data.train_fraction < 1.0,
          "data.train_fraction must be in (0, 1)");
  require(c.data.rational_conflict >= 0.0 && c.data.rational_conflict <= 1.0,
          "data.rational_conflict must be in [0, 1]");
  require(c.data.irrational_conflict >= 0.0 && c.data.irrational_conflict <= 1.0,
          "data.irrational_conflict must be in [0, 1]");
  require(c.data.max_surround >= 0 && c.data.max_surround <= 2, "data.max_surround must be in 0..2");
  require(c.shape.latent >= 1, "cvae.latent must be >= 1");
  require(!c.shape.hidden.empty(), "cvae.hidden needs at least one layer");
  for (auto h : c.shape.hidden) require(h >= 1, "cvae.hidden sizes must be >= 1");
  require(c.training.beta >= 0.0, "cvae.beta must be >= 0");
  require(c.training.epochs >= 1, "cvae.epochs must be >= 1");
  require(c.training.batch_size >= 1, "cvae.batch_size must be >= 1");
  require(positive(c.training.learning_rate), "cvae.learning_rate must be > 0");
  require(c.irl.max_iterations >= 1, "irl.max_iterations must be >= 1");
  require(positive(c.irl.gradient_tolerance), "irl.gradient_tolerance must be > 0");
  require(positive(c.irl.weight_step), "irl.weight_step must be > 0");
  require(positive(c.irl.initial_step), "irl.initial_step must be > 0");
  require(positive(c.irl.features.proximity_sigma), "irl.proximity_sigma must be > 0");
  require(positive(c.planner.bounds.max_accel), "planner.max_accel must be > 0");
  require(positive(c.planner.bounds.max_lateral_rate), "planner.max_lateral_rate must be > 0");
  require(c.planner.max_iterations >= 1, "planner.max_iterations must be >= 1");
  require(positive(c.planner.gradient_tolerance), "planner.gradient_tolerance must be > 0");
  require(positive(c.planner.fd_step), "planner.fd_step must be > 0");
  require(c.pipeline.raw_samples >= 1, "pipeline.raw_samples must be >= 1");
  require(c.pipeline.final_samples >= 1, "pipeline.final_samples must be >= 1");
  require(positive(c.pipeline.threshold), "pipeline.threshold must be > 0");
  require(c.pipeline.threshold_doublings >= 0, "pipeline.threshold_doublings must be >= 0");
  require(positive(c.pipeline.bandwidth), "pipeline.bandwidth must be > 0");
  if (c.pipeline.forced_ratio) {
    require(*c.pipeline.forced_ratio >= 0.0 && std::isfinite(*c.pipeline.forced_ratio),
            "pipeline.forced_ratio must be >= 0");
  }
  require(c.hybrid_ratio >= 0.0 && std::isfinite(c.hybrid_ratio), "pipeline.hybrid_ratio must be >= 0");
  require(!c.sweep_ratios.empty(), "sweep.ratios must not be empty");
  for (std::size_t i = 0; i < c.sweep_ratios.size(); ++i) {
    require(c.sweep_ratios[i] >= 0.0, "sweep.ratios must be >= 0");
    if (i > 0) require(c.sweep_ratios[i] > c.sweep_ratios[i - 1], "sweep.ratios must increase");
  }
  require(c.sweep_repeats >= 1, "sweep.repeats must be >= 1");
  bool known_speed = false;
  for (double v : scenario::kCornerSpeeds) known_speed = known_speed || v == c.sweep_ego_speed;
  require(known_speed, "sweep.ego_speed must be one of the corner-case speeds 4, 6, 7, 8");
  require(c.rmse_samples >= 1, "evaluation.rmse_samples must be >= 1");
}

}  // namespace hpred
