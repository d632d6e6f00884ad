#pragma once

// Minimal SVG emission for the experiment figures. Numbers are written with
// fixed precision so the files are byte-stable across runs.

#include <optional>
#include <string>
#include <vector>

#include "hpred/geometry.hpp"

namespace hpred::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> error;  ///< half-height of the error bar, may be empty
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Line chart with markers and optional error bars. Throws InvalidArgument
/// on ragged series.
std::string line_chart(const std::vector<Series>& series, const ChartLabels& labels);

/// One panel of a scene plot: sets of predicted-vehicle and ego polylines
/// drawn over the reference paths.
struct TrajectoryPanel {
  std::string title;
  std::vector<std::vector<CartesianPoint>> pred;
  std::vector<std::vector<CartesianPoint>> ego;
  std::optional<double> collision_rate;
};

/// Panels side by side, sharing one view box fitted to the scene.
std::string trajectory_panels(const std::vector<ReferencePath>& paths,
                              const std::vector<TrajectoryPanel>& panels,
                              const std::string& title);

/// Escapes &, <, >, and quotes for text nodes and attributes.
std::string escape(const std::string& text);

}  // namespace hpred::svg
