#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hpred {

struct CartesianPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const CartesianPoint&, const CartesianPoint&) = default;
};

/// Path-relative coordinates. `s` is measured from the owning path's origin,
/// `d` is positive to the left of the direction of travel.
struct FrenetState {
  double s = 0.0;
  double d = 0.0;

  friend bool operator==(const FrenetState&, const FrenetState&) = default;
};

double distance(const CartesianPoint& a, const CartesianPoint& b);

/// Result of projecting a Cartesian point onto a polyline, in absolute arc
/// length (not shifted by the origin).
struct PathProjection {
  double arc_length = 0.0;
  double lateral = 0.0;   ///< signed, left positive
  double distance = 0.0;  ///< unsigned distance to the nearest point
  std::size_t segment = 0;
};

/// Arc-length parameterized polyline that defines one Frenet frame.
class ReferencePath {
 public:
  static constexpr double kDefaultCorridorHalfWidth = 4.0;

  ReferencePath() = default;
  ReferencePath(std::string id, std::vector<CartesianPoint> vertices,
                double origin_arc_length = 0.0,
                double corridor_half_width = kDefaultCorridorHalfWidth);

  const std::string& id() const { return id_; }
  const std::vector<CartesianPoint>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative_lengths() const { return cumulative_; }
  double total_length() const { return cumulative_.back(); }
  double origin_arc_length() const { return origin_; }
  double corridor_half_width() const { return corridor_half_width_; }

  ReferencePath with_origin(double origin_arc_length) const;

  /// Point at absolute arc length; throws OffPathEnd outside [0, total].
  CartesianPoint point_at(double arc_length) const;
  /// Unit tangent at absolute arc length. At an interior vertex the outgoing
  /// segment is used.
  CartesianPoint tangent_at(double arc_length) const;

  /// Nearest point over all segments, no corridor check. Ties go to the
  /// lower arc length.
  PathProjection nearest(const CartesianPoint& p) const;

 private:
  std::size_t segment_for(double arc_length) const;

  std::string id_;
  std::vector<CartesianPoint> vertices_;
  std::vector<double> cumulative_;
  double origin_ = 0.0;
  double corridor_half_width_ = kDefaultCorridorHalfWidth;
};

FrenetState project_to_frenet(const CartesianPoint& p, const ReferencePath& path);
CartesianPoint to_cartesian(const FrenetState& f, const ReferencePath& path);

struct CrossPoint {
  CartesianPoint point;
  double arc_a = 0.0;  ///< absolute arc length on the first path
  double arc_b = 0.0;
  /// Set for degenerate results: overlapping collinear segments or the
  /// closest-approach fallback.
  bool flagged = false;
};

/// First intersection by arc length along `a`. Throws NoIntersection when the
/// polylines are disjoint.
CrossPoint cross_point(const ReferencePath& a, const ReferencePath& b);

/// Midpoint of the closest approach between two disjoint polylines; always
/// flagged.
CrossPoint closest_approach(const ReferencePath& a, const ReferencePath& b);

/// Re-anchors both paths at their cross point (or the closest-approach
/// midpoint when they do not intersect, reported through `cross.flagged`).
struct AnchoredPair {
  ReferencePath a;
  ReferencePath b;
  CrossPoint cross;
  bool intersects = true;
};
AnchoredPair anchor_at_cross_point(const ReferencePath& a, const ReferencePath& b);

struct VehicleFootprint {
  double length = 4.5;
  double width = 1.8;
  double circle_radius = 1.0;
  std::array<double, 3> circle_offsets{-1.5, 0.0, 1.5};
};

struct Pose {
  CartesianPoint position;
  CartesianPoint heading;  ///< unit vector
};

/// Position plus the path tangent as heading.
Pose pose_at(const FrenetState& f, const ReferencePath& path);

/// True when s lies between the two ends of the path.
bool on_path(const FrenetState& f, const ReferencePath& path);

std::array<CartesianPoint, 3> footprint_circles(const Pose& pose,
                                                const VehicleFootprint& footprint);

bool circles_overlap(const Pose& a, const VehicleFootprint& fa, const Pose& b,
                     const VehicleFootprint& fb);

/// Three-circle collision test between two vehicles on their own paths.
bool collision(const FrenetState& sa, const ReferencePath& path_a,
               const FrenetState& sb, const ReferencePath& path_b,
               const VehicleFootprint& fa, const VehicleFootprint& fb);

/// Fixed-rate sequence of Frenet states on one reference path.
struct Trajectory {
  std::vector<FrenetState> states;
  double dt = 0.2;
  std::string path_id;

  std::size_t size() const { return states.size(); }
  const FrenetState& back() const { return states.back(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws InvalidArgument unless non-empty, finite and dt > 0.
void validate(const Trajectory& trajectory);

std::vector<CartesianPoint> to_cartesian(const Trajectory& trajectory,
                                         const ReferencePath& path);

}  // namespace hpred
