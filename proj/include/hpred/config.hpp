#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpred/cvae.hpp"
#include "hpred/irl.hpp"
#include "hpred/metrics.hpp"
#include "hpred/pipeline.hpp"
#include "hpred/planner.hpp"
#include "hpred/scenario.hpp"

namespace hpred {

/// Every tunable of the command-line tools. Loaded from JSON sections that
/// mirror the member structs; absent keys keep their defaults and unknown
/// keys are rejected with ConfigError.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  scenario::DatasetConfig data{.count = 1000, .mix = 0.8};

  cvae::CvaeShape shape;
  cvae::TrainingConfig training;

  /// `irl.features` is shared by the planner and the pipeline.
  irl::IrlConfig irl;
  planner::PlannerConfig planner;
  pipeline::PipelineConfig pipeline;

  /// Ratio of the hybrid run in predict and corner-cases.
  double hybrid_ratio = 1.5;

  std::vector<double> sweep_ratios{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  std::size_t sweep_repeats = 10;
  /// Ego speed of the corner scene used by sweep and predict.
  double sweep_ego_speed = 7.0;

  std::size_t rmse_samples = 20;
  metrics::SampleReduction rmse_reduction = metrics::SampleReduction::BestOfSamples;

  /// Artifact locations; when unset they default to files in output_dir and
  /// are built on demand.
  std::optional<std::string> data_dir;
  std::optional<std::string> cvae_model;
  std::optional<std::string> cost_weights;
  std::optional<std::string> scene_file;
  std::optional<std::string> path_file;

  /// Pipeline settings with the planner and feature sections folded in.
  pipeline::PipelineConfig resolved_pipeline() const;
};

/// Throws ConfigError naming the offending key.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
/// Throws ConfigError on out-of-range values.
void validate(const RunConfig& config);

}  // namespace hpred
