#include "hpred/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "hpred/error.hpp"

namespace hpred {
namespace {

constexpr double kArcSlack = 1e-9;

CartesianPoint sub(const CartesianPoint& a, const CartesianPoint& b) { return {a.x - b.x, a.y - b.y}; }
CartesianPoint add(const CartesianPoint& a, const CartesianPoint& b) { return {a.x + b.x, a.y + b.y}; }
CartesianPoint scale(const CartesianPoint& a, double k) { return {a.x * k, a.y * k}; }
double dot(const CartesianPoint& a, const CartesianPoint& b) { return a.x * b.x + a.y * b.y; }
double cross(const CartesianPoint& a, const CartesianPoint& b) { return a.x * b.y - a.y * b.x; }
CartesianPoint left_normal(const CartesianPoint& t) { return {-t.y, t.x}; }

bool finite(const CartesianPoint& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Frame of one segment: points are A + u*T + v*n with the normal field
// N(t) = (1-t) mA + t mB, where the miter vectors satisfy mA.n = mB.n = 1.
struct SegmentFrame {
  CartesianPoint start;
  CartesianPoint tangent;
  CartesianPoint normal;
  double length;
  double k_start;  // mA . tangent
  double k_end;    // mB . tangent
};

}  // namespace

double distance(const CartesianPoint& a, const CartesianPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

ReferencePath::ReferencePath(std::string id, std::vector<CartesianPoint> vertices,
                             double origin_arc_length, double corridor_half_width)
    : id_(std::move(id)),
      vertices_(std::move(vertices)),
      origin_(origin_arc_length),
      corridor_half_width_(corridor_half_width) {
  if (vertices_.size() < 2) {
    throw Error(ErrorCode::InvalidPath, "path '" + id_ + "' needs at least 2 vertices");
  }
  if (!(corridor_half_width_ > 0.0)) {
    throw Error(ErrorCode::InvalidPath, "path '" + id_ + "' corridor half width must be > 0");
  }
  cumulative_.reserve(vertices_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    if (!finite(vertices_[i]) || !finite(vertices_[i - 1])) {
      throw Error(ErrorCode::InvalidPath, "path '" + id_ + "' has non-finite vertex");
    }
    const double len = distance(vertices_[i - 1], vertices_[i]);
    if (!(len > 0.0)) {
      throw Error(ErrorCode::InvalidPath,
                  "path '" + id_ + "' has repeated vertex at index " + std::to_string(i));
    }
    cumulative_.push_back(cumulative_.back() + len);
  }
  for (std::size_t i = 1; i + 1 < vertices_.size(); ++i) {
    const auto t0 = scale(sub(vertices_[i], vertices_[i - 1]), 1.0 / (cumulative_[i] - cumulative_[i - 1]));
    const auto t1 = scale(sub(vertices_[i + 1], vertices_[i]), 1.0 / (cumulative_[i + 1] - cumulative_[i]));
    if (1.0 + dot(t0, t1) < 1e-6) {
      throw Error(ErrorCode::InvalidPath,
                  "path '" + id_ + "' reverses direction at vertex " + std::to_string(i));
    }
  }
  if (!(origin_ >= -kArcSlack && origin_ <= total_length() + kArcSlack)) {
    throw Error(ErrorCode::InvalidPath, "path '" + id_ + "' origin outside [0, length]");
  }
}

ReferencePath ReferencePath::with_origin(double origin_arc_length) const {
  ReferencePath copy = *this;
  if (!(origin_arc_length >= -kArcSlack && origin_arc_length <= total_length() + kArcSlack)) {
    throw Error(ErrorCode::InvalidPath, "path '" + id_ + "' origin outside [0, length]");
  }
  copy.origin_ = std::clamp(origin_arc_length, 0.0, total_length());
  return copy;
}

std::size_t ReferencePath::segment_for(double arc_length) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc_length);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, vertices_.size() - 2);
}

CartesianPoint ReferencePath::point_at(double arc_length) const {
  if (!(arc_length >= -kArcSlack && arc_length <= total_length() + kArcSlack)) {
    throw Error(ErrorCode::OffPathEnd, "arc length " + std::to_string(arc_length) +
                                           " outside path '" + id_ + "'");
  }
  const std::size_t i = segment_for(arc_length);
  const double len = cumulative_[i + 1] - cumulative_[i];
  const double t = (arc_length - cumulative_[i]) / len;
  return add(vertices_[i], scale(sub(vertices_[i + 1], vertices_[i]), t));
}

CartesianPoint ReferencePath::tangent_at(double arc_length) const {
  const std::size_t i = segment_for(arc_length);
  const double len = cumulative_[i + 1] - cumulative_[i];
  return scale(sub(vertices_[i + 1], vertices_[i]), 1.0 / len);
}

PathProjection ReferencePath::nearest(const CartesianPoint& p) const {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
    const double len = cumulative_[i + 1] - cumulative_[i];
    const auto tangent = scale(sub(vertices_[i + 1], vertices_[i]), 1.0 / len);
    const auto rel = sub(p, vertices_[i]);
    const double u = std::clamp(dot(rel, tangent), 0.0, len);
    const auto foot = add(vertices_[i], scale(tangent, u));
    const double dist = distance(p, foot);
    if (dist < best.distance) {
      best.distance = dist;
      best.arc_length = cumulative_[i] + u;
      best.segment = i;
      best.lateral = cross(tangent, sub(p, foot)) >= 0.0 ? dist : -dist;
    }
  }
  return best;
}

namespace {

CartesianPoint unit_tangent(const ReferencePath& path, std::size_t seg) {
  const auto& v = path.vertices();
  const auto& c = path.cumulative_lengths();
  return scale(sub(v[seg + 1], v[seg]), 1.0 / (c[seg + 1] - c[seg]));
}

// Miter vector at vertex i; m . n_prev = m . n_next = 1.
CartesianPoint miter(const ReferencePath& path, std::size_t vertex) {
  const std::size_t last = path.vertices().size() - 1;
  if (vertex == 0) return left_normal(unit_tangent(path, 0));
  if (vertex == last) return left_normal(unit_tangent(path, last - 1));
  const auto n0 = left_normal(unit_tangent(path, vertex - 1));
  const auto n1 = left_normal(unit_tangent(path, vertex));
  return scale(add(n0, n1), 1.0 / (1.0 + dot(n0, n1)));
}

SegmentFrame frame_of(const ReferencePath& path, std::size_t seg) {
  const auto& c = path.cumulative_lengths();
  SegmentFrame f;
  f.start = path.vertices()[seg];
  f.tangent = unit_tangent(path, seg);
  f.normal = left_normal(f.tangent);
  f.length = c[seg + 1] - c[seg];
  f.k_start = dot(miter(path, seg), f.tangent);
  f.k_end = dot(miter(path, seg + 1), f.tangent);
  return f;
}

struct FrameHit {
  double arc;
  double lateral;
};

std::optional<FrameHit> locate(const CartesianPoint& p, const ReferencePath& path) {
  std::optional<FrameHit> best;
  constexpr double kTol = 1e-12;
  const auto& c = path.cumulative_lengths();
  for (std::size_t i = 0; i + 1 < path.vertices().size(); ++i) {
    const SegmentFrame f = frame_of(path, i);
    const auto rel = sub(p, f.start);
    const double v = dot(rel, f.normal);
    const double u = dot(rel, f.tangent);
    const double denom = f.length + v * (f.k_end - f.k_start);
    if (!(denom > 0.0)) continue;
    const double t = (u - v * f.k_start) / denom;
    if (t < -kTol || t > 1.0 + kTol) continue;
    if (!best || std::abs(v) < std::abs(best->lateral)) {
      best = FrameHit{c[i] + std::clamp(t, 0.0, 1.0) * f.length, v};
    }
  }
  return best;
}

}  // namespace

FrenetState project_to_frenet(const CartesianPoint& p, const ReferencePath& path) {
  const auto hit = locate(p, path);
  if (!hit || std::abs(hit->lateral) > path.corridor_half_width()) {
    throw Error(ErrorCode::OutOfCorridor, "point (" + std::to_string(p.x) + ", " +
                                              std::to_string(p.y) + ") outside corridor of '" +
                                              path.id() + "'");
  }
  return {hit->arc - path.origin_arc_length(), hit->lateral};
}

CartesianPoint to_cartesian(const FrenetState& f, const ReferencePath& path) {
  const double arc = f.s + path.origin_arc_length();
  if (!(arc >= -kArcSlack && arc <= path.total_length() + kArcSlack)) {
    throw Error(ErrorCode::OffPathEnd, "s=" + std::to_string(f.s) + " beyond ends of '" +
                                           path.id() + "'");
  }
  const auto& c = path.cumulative_lengths();
  const auto it = std::upper_bound(c.begin(), c.end(), arc);
  std::size_t seg = it == c.begin() ? 0 : static_cast<std::size_t>(it - c.begin()) - 1;
  seg = std::min(seg, path.vertices().size() - 2);
  const SegmentFrame fr = frame_of(path, seg);
  const double t = std::clamp((arc - c[seg]) / fr.length, 0.0, 1.0);
  const double along = t * fr.length + f.d * ((1.0 - t) * fr.k_start + t * fr.k_end);
  return add(fr.start, add(scale(fr.tangent, along), scale(fr.normal, f.d)));
}

CrossPoint cross_point(const ReferencePath& a, const ReferencePath& b) {
  const auto& va = a.vertices();
  const auto& vb = b.vertices();
  const auto& ca = a.cumulative_lengths();
  const auto& cb = b.cumulative_lengths();
  std::optional<CrossPoint> best;
  auto consider = [&](const CrossPoint& cp) {
    if (!best || cp.arc_a < best->arc_a ||
        (cp.arc_a == best->arc_a && cp.arc_b < best->arc_b)) {
      best = cp;
    }
  };
  for (std::size_t i = 0; i + 1 < va.size(); ++i) {
    const auto p = va[i];
    const auto r = sub(va[i + 1], va[i]);
    for (std::size_t j = 0; j + 1 < vb.size(); ++j) {
      const auto q = vb[j];
      const auto s = sub(vb[j + 1], vb[j]);
      const double denom = cross(r, s);
      const auto qp = sub(q, p);
      const double scale_rs = std::sqrt(dot(r, r) * dot(s, s));
      if (std::abs(denom) <= 1e-12 * scale_rs) {
        // Parallel: only collinear overlaps count.
        if (std::abs(cross(qp, r)) > 1e-12 * std::sqrt(dot(r, r)) * (1.0 + std::sqrt(dot(qp, qp)))) continue;
        const double rr = dot(r, r);
        double t0 = dot(qp, r) / rr;
        double t1 = t0 + dot(s, r) / rr;
        if (t0 > t1) std::swap(t0, t1);
        const double lo = std::max(0.0, t0);
        const double hi = std::min(1.0, t1);
        if (lo > hi) continue;
        const auto pt = add(p, scale(r, lo));
        const double ub = dot(sub(pt, q), s) / dot(s, s);
        consider(CrossPoint{pt, ca[i] + lo * (ca[i + 1] - ca[i]),
                            cb[j] + std::clamp(ub, 0.0, 1.0) * (cb[j + 1] - cb[j]), true});
        continue;
      }
      const double t = cross(qp, s) / denom;
      const double u = cross(qp, r) / denom;
      if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) continue;
      consider(CrossPoint{add(p, scale(r, t)), ca[i] + t * (ca[i + 1] - ca[i]),
                          cb[j] + u * (cb[j + 1] - cb[j]), false});
    }
  }
  if (!best) {
    throw Error(ErrorCode::NoIntersection,
                "paths '" + a.id() + "' and '" + b.id() + "' do not intersect");
  }
  return *best;
}

CrossPoint closest_approach(const ReferencePath& a, const ReferencePath& b) {
  CrossPoint best;
  double best_dist = std::numeric_limits<double>::infinity();
  auto check = [&](const CartesianPoint& from, double arc_from, const ReferencePath& other,
                   bool from_is_a) {
    const PathProjection proj = other.nearest(from);
    if (proj.distance < best_dist) {
      best_dist = proj.distance;
      const auto on_other = other.point_at(proj.arc_length);
      best.point = scale(add(from, on_other), 0.5);
      best.arc_a = from_is_a ? arc_from : proj.arc_length;
      best.arc_b = from_is_a ? proj.arc_length : arc_from;
    }
  };
  // Minimum distance between disjoint polylines is attained at a vertex.
  for (std::size_t i = 0; i < a.vertices().size(); ++i) check(a.vertices()[i], a.cumulative_lengths()[i], b, true);
  for (std::size_t j = 0; j < b.vertices().size(); ++j) check(b.vertices()[j], b.cumulative_lengths()[j], a, false);
  best.flagged = true;
  return best;
}

AnchoredPair anchor_at_cross_point(const ReferencePath& a, const ReferencePath& b) {
  AnchoredPair out;
  try {
    out.cross = cross_point(a, b);
    out.intersects = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoIntersection) throw;
    out.cross = closest_approach(a, b);
    out.intersects = false;
  }
  out.a = a.with_origin(out.cross.arc_a);
  out.b = b.with_origin(out.cross.arc_b);
  return out;
}

Pose pose_at(const FrenetState& f, const ReferencePath& path) {
  const double arc = std::clamp(f.s + path.origin_arc_length(), 0.0, path.total_length());
  return Pose{to_cartesian(f, path), path.tangent_at(arc)};
}

bool on_path(const FrenetState& f, const ReferencePath& path) {
  const double arc = f.s + path.origin_arc_length();
  return arc >= 0.0 && arc <= path.total_length();
}

std::array<CartesianPoint, 3> footprint_circles(const Pose& pose,
                                                const VehicleFootprint& footprint) {
  std::array<CartesianPoint, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = add(pose.position, scale(pose.heading, footprint.circle_offsets[i]));
  }
  return out;
}

bool circles_overlap(const Pose& a, const VehicleFootprint& fa, const Pose& b,
                     const VehicleFootprint& fb) {
  const auto ca = footprint_circles(a, fa);
  const auto cb = footprint_circles(b, fb);
  const double reach = fa.circle_radius + fb.circle_radius;
  for (const auto& p : ca) {
    for (const auto& q : cb) {
      if (distance(p, q) < reach) return true;
    }
  }
  return false;
}

bool collision(const FrenetState& sa, const ReferencePath& path_a, const FrenetState& sb,
               const ReferencePath& path_b, const VehicleFootprint& fa,
               const VehicleFootprint& fb) {
  return circles_overlap(pose_at(sa, path_a), fa, pose_at(sb, path_b), fb);
}

void validate(const Trajectory& trajectory) {
  if (trajectory.states.empty()) {
    throw Error(ErrorCode::InvalidArgument, "trajectory is empty");
  }
  if (!(trajectory.dt > 0.0) || !std::isfinite(trajectory.dt)) {
    throw Error(ErrorCode::InvalidArgument, "trajectory dt must be positive");
  }
  for (const auto& s : trajectory.states) {
    if (!std::isfinite(s.s) || !std::isfinite(s.d)) {
      throw Error(ErrorCode::InvalidArgument, "trajectory has non-finite state");
    }
  }
}

std::vector<CartesianPoint> to_cartesian(const Trajectory& trajectory,
                                         const ReferencePath& path) {
  std::vector<CartesianPoint> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory.states) out.push_back(to_cartesian(s, path));
  return out;
}

}  // namespace hpred
