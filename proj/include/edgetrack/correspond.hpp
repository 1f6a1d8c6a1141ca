#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgetrack/wiremodel.hpp"

namespace edgetrack {

/// Sample point on a projected model edge. edge_normal is the unit image
/// normal of the projected edge; the 1-D search for image evidence runs
/// along it.
struct ControlPoint {
  Vec3 x3d = Vec3::Zero();          // model/world frame, meters
  Vec2 uv_projected = Vec2::Zero();  // pixels
  Vec2 edge_normal = Vec2::Zero();   // unit
  int model_edge = -1;
};

/// One candidate image match for a control point. The matched point lies on
/// the detected segment's supporting line, displaced from uv_projected by
/// signed_distance along edge_normal (exactly, by construction).
struct MatchHypothesis {
  ControlPoint control_point;
  Vec2 uv_matched = Vec2::Zero();
  double signed_distance = 0.0;  // pixels, along edge_normal
  int segment_index = -1;
};

/// Places n = max(2, floor(L/spacing)+1) uniformly spaced points on each
/// profile segment, endpoints included; 3D positions interpolate the stored
/// 3D endpoints with the same parameter. Segments shorter than 1e-6 px are
/// skipped and counted in *degenerate_count.
inline std::vector<ControlPoint> sample_control_points(
    const std::vector<Segment2D>& profile, double spacing,
    int* degenerate_count = nullptr) {
  if (spacing <= 0.0) fail(ErrorCode::ParseError, "control-point spacing must be > 0");
  if (degenerate_count) *degenerate_count = 0;

  std::vector<ControlPoint> out;
  for (const Segment2D& seg : profile) {
    if (!seg.provenance.has_value())
      fail(ErrorCode::ParseError, "profile segment lacks 3D provenance");
    if (seg.length < 1e-6) {
      if (degenerate_count) ++*degenerate_count;
      continue;
    }
    const Vec2 dir = (seg.p1 - seg.p0) / seg.length;
    const Vec2 normal(-dir.y(), dir.x());
    const int n = std::max(2, static_cast<int>(std::floor(seg.length / spacing)) + 1);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / (n - 1);
      ControlPoint cp;
      cp.x3d = seg.provenance->x0 + t * (seg.provenance->x1 - seg.provenance->x0);
      cp.uv_projected = seg.p0 + t * (seg.p1 - seg.p0);
      cp.edge_normal = normal;
      cp.model_edge = seg.provenance->model_edge;
      out.push_back(cp);
    }
  }
  return out;
}

namespace detail {

/// Difference of two [0, pi) orientations, folded to [0, pi/2].
inline double orientation_distance(double a, double b) {
  double d = std::abs(a - b);
  return std::min(d, M_PI - d);
}

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline double point_segment_distance(const Vec2& p, const Segment2D& s) {
  if (s.length < 1e-9) return (p - s.p0).norm();
  const Vec2 dir = (s.p1 - s.p0) / s.length;
  const double t = std::clamp(dir.dot(p - s.p0), 0.0, s.length);
  return (p - (s.p0 + t * dir)).norm();
}

}  // namespace detail

/// When two near-parallel model edges project within a few pixels of each
/// other — a face seen edge-on, its far edge emerging from behind the near
/// one — their image strokes merge and evidence found there cannot be
/// attributed to either edge. Drops control points lying within `gap` px of
/// a profile segment of ANOTHER model edge whose orientation is within
/// orient_tol (degrees, mod pi) of the point's own edge.
inline std::vector<ControlPoint> filter_ambiguous_points(
    const std::vector<ControlPoint>& points, const std::vector<Segment2D>& profile,
    double gap, double orient_tol) {
  if (gap <= 0.0) return points;
  const double tol_rad = orient_tol * M_PI / 180.0;

  std::vector<ControlPoint> out;
  for (const ControlPoint& cp : points) {
    const Vec2 edge_dir(cp.edge_normal.y(), -cp.edge_normal.x());
    const double cp_orient = segment_orientation(Vec2::Zero(), edge_dir);
    bool ambiguous = false;
    for (const Segment2D& seg : profile) {
      if (seg.provenance && seg.provenance->model_edge == cp.model_edge) continue;
      if (detail::orientation_distance(seg.orientation, cp_orient) > tol_rad)
        continue;
      if (detail::point_segment_distance(cp.uv_projected, seg) <= gap) {
        ambiguous = true;
        break;
      }
    }
    if (!ambiguous) out.push_back(cp);
  }
  return out;
}

namespace detail {

/// Mean perpendicular offset of segment b from the line through a.p0 along
/// dir_a, measured at b's endpoints.
inline double line_offset(const Segment2D& b, const Vec2& a0, const Vec2& nrm_a) {
  return 0.5 * (nrm_a.dot(b.p0 - a0) + nrm_a.dot(b.p1 - a0));
}

/// Overlap length of b's projection onto [0, a.length] along dir_a.
inline double extent_overlap(const Segment2D& b, const Vec2& a0, const Vec2& dir_a,
                             double a_len) {
  const double t0 = dir_a.dot(b.p0 - a0);
  const double t1 = dir_a.dot(b.p1 - a0);
  return std::min(std::max(t0, t1), a_len) - std::max(std::min(t0, t1), 0.0);
}

/// Merges runs of near-collinear segments (same supporting line within
/// lateral_tol px, orientation within tol_rad) into their union extent;
/// detector output is fragmented wherever a stroke is interrupted.
inline std::vector<Segment2D> merge_collinear(const std::vector<Segment2D>& segments,
                                              double lateral_tol, double tol_rad) {
  std::vector<std::size_t> order(segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return segments[a].length > segments[b].length;
  });

  std::vector<bool> used(segments.size(), false);
  std::vector<Segment2D> out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (used[i]) continue;
    used[i] = true;
    const Segment2D& a = segments[i];
    if (a.length < 1e-9) {
      out.push_back(a);
      continue;
    }
    const Vec2 dir_a = (a.p1 - a.p0) / a.length;
    const Vec2 nrm_a(-dir_a.y(), dir_a.x());

    double lo = 0.0, hi = a.length;
    double off_sum = 0.0, len_sum = a.length;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (used[j]) continue;
      const Segment2D& b = segments[j];
      if (b.length < 1e-9) continue;
      if (orientation_distance(a.orientation, b.orientation) > tol_rad) continue;
      const double off = line_offset(b, a.p0, nrm_a);
      if (std::abs(off) > lateral_tol) continue;
      used[j] = true;
      off_sum += off * b.length;
      len_sum += b.length;
      for (const Vec2& p : {b.p0, b.p1}) {
        const double t = dir_a.dot(p - a.p0);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
    const Vec2 base = a.p0 + (off_sum / len_sum) * nrm_a;
    out.push_back(make_segment(base + lo * dir_a, base + hi * dir_a));
  }
  return out;
}

}  // namespace detail

/// Thin structural members image as strokes a couple of pixels wide, and the
/// detector reports each stroke's two intensity walls as two anti-parallel
/// segments straddling the centerline. Matching against either wall injects
/// a half-stroke-width bias into the pose, so fuse wall pairs first. Stage
/// one repairs fragmentation: near-collinear detections (same line within 1
/// px) merge into their union. Stage two pairs segments whose orientations
/// agree within max_angle_deg (mod pi) and whose supporting lines are
/// separated by at most max_gap px; among candidates the largest extent
/// overlap wins, and the pair is replaced by the midline between the two
/// supporting lines — the walls straddle the stroke symmetrically, so the
/// midpoint is unweighted — spanning the union of both extents. Unpaired
/// segments pass through. Greedy and deterministic: longer segments first,
/// input order breaking ties.
inline std::vector<Segment2D> fuse_parallel_pairs(
    const std::vector<Segment2D>& segments, double max_gap,
    double max_angle_deg = 5.0) {
  if (max_gap <= 0.0) return segments;
  const double tol_rad = max_angle_deg * M_PI / 180.0;

  const std::vector<Segment2D> merged =
      detail::merge_collinear(segments, 1.0, tol_rad);

  std::vector<std::size_t> order(merged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return merged[a].length > merged[b].length;
  });

  std::vector<bool> used(merged.size(), false);
  std::vector<Segment2D> out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (used[i]) continue;
    used[i] = true;
    const Segment2D& a = merged[i];
    if (a.length < 1e-9) {
      out.push_back(a);
      continue;
    }
    const Vec2 dir_a = (a.p1 - a.p0) / a.length;
    const Vec2 nrm_a(-dir_a.y(), dir_a.x());

    std::size_t best_j = merged.size();
    double best_overlap = 0.0;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (used[j]) continue;
      const Segment2D& b = merged[j];
      if (b.length < 1e-9) continue;
      if (detail::orientation_distance(a.orientation, b.orientation) > tol_rad)
        continue;
      const double gap = std::abs(detail::line_offset(b, a.p0, nrm_a));
      if (gap > max_gap || gap < 1e-9) continue;
      const double overlap = detail::extent_overlap(b, a.p0, dir_a, a.length);
      if (overlap < 0.5 * std::min(a.length, b.length)) continue;
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_j = j;
      }
    }

    if (best_j == merged.size()) {
      out.push_back(a);
      continue;
    }
    used[best_j] = true;
    const Segment2D& b = merged[best_j];

    const double off_b = detail::line_offset(b, a.p0, nrm_a);
    const Vec2 base = a.p0 + 0.5 * off_b * nrm_a;
    double lo = 0.0, hi = a.length;
    for (const Vec2& p : {b.p0, b.p1}) {
      const double t = dir_a.dot(p - a.p0);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    out.push_back(make_segment(base + lo * dir_a, base + hi * dir_a));
  }
  return out;
}

/// 1-D search along the control point's edge normal: each detected segment
/// whose orientation is within orient_tol of the edge (mod pi) is
/// intersected with the normal ray; hits within the segment extent (1 px
/// slack) and within `radius` become hypotheses, sorted by |signed_distance|
/// ascending, at most k_max of them.
inline std::vector<MatchHypothesis> search_candidates(
    const ControlPoint& cp, const std::vector<Segment2D>& segments,
    double radius, double orient_tol, int k_max) {
  if (radius <= 0.0 || k_max < 1)
    fail(ErrorCode::ParseError, "invalid search parameters");

  const Vec2 edge_dir(cp.edge_normal.y(), -cp.edge_normal.x());
  const double cp_orient = segment_orientation(Vec2::Zero(), edge_dir);
  const double tol_rad = orient_tol * M_PI / 180.0;

  std::vector<MatchHypothesis> hits;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const Segment2D& seg = segments[j];
    if (seg.length < 1e-9) continue;
    if (detail::orientation_distance(seg.orientation, cp_orient) > tol_rad) continue;

    // uv_projected + s*normal = p0 + t*dir, solved by Cramer's rule. The
    // orientation gate bounds the denominator away from zero.
    const Vec2 dir = (seg.p1 - seg.p0) / seg.length;
    const double denom = detail::cross2(cp.edge_normal, dir);
    if (std::abs(denom) < 1e-9) continue;
    const Vec2 r = seg.p0 - cp.uv_projected;
    const double s = detail::cross2(r, dir) / denom;
    const double t = detail::cross2(r, cp.edge_normal) / denom;

    if (std::abs(s) > radius) continue;
    if (t < -1.0 || t > seg.length + 1.0) continue;

    MatchHypothesis h;
    h.control_point = cp;
    h.uv_matched = cp.uv_projected + s * cp.edge_normal;
    h.signed_distance = s;
    h.segment_index = static_cast<int>(j);
    hits.push_back(h);
  }

  std::stable_sort(hits.begin(), hits.end(),
                   [](const MatchHypothesis& a, const MatchHypothesis& b) {
                     return std::abs(a.signed_distance) < std::abs(b.signed_distance);
                   });
  if (static_cast<int>(hits.size()) > k_max) hits.resize(k_max);
  return hits;
}

}  // namespace edgetrack
