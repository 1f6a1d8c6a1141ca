#pragma once

#include <string>
#include <vector>

#include "edgetrack/estimate.hpp"
#include "edgetrack/lsd.hpp"
#include "edgetrack/rng.hpp"

namespace edgetrack {

struct TrackerConfig {
  LsdParams lsd;
  double fuse_gap = 4.0;        // wall-pair fusing distance, px; 0 disables
  double spacing = 10.0;        // control-point spacing, px
  double search_radius = 20.0;  // px
  // Orientation gate for matching, degrees. The prior rotates projected
  // edges by a few degrees per frame at most; a loose gate lets skew clutter
  // capture control points whose own edge evidence dropped out.
  double orient_tol = 12.0;
  int k_max = 3;                // hypotheses kept per control point
  double ambiguity_gap = 8.0;   // drop points this close to a parallel edge, px
  RansacConfig ransac;
  Pose cam_to_body = Pose::identity();
  // Loss policy is fixed: hold the last pose and flag the frame Lost.
};

enum class TrackStatus { Tracking, Lost };

struct TrackerState {
  int frame_index = 0;  // index of the next frame to process
  Pose camera_pose = Pose::identity();
  TrackStatus status = TrackStatus::Tracking;
  double last_inlier_fraction = 0.0;
  double last_rms = 0.0;
  std::string diagnostics;  // loss reason code when status == Lost
};

/// Parses the initialization correspondence file:
/// [{"uv":[u,v],"xyz":[x,y,z]}, ...]
inline std::vector<Correspondence> correspondences_from_json(const std::string& text) {
  const nlohmann::json j = parse_json_text(text);
  std::vector<Correspondence> out;
  try {
    for (const auto& item : j) {
      Correspondence c;
      c.uv = Vec2(item.at("uv")[0].get<double>(), item.at("uv")[1].get<double>());
      c.x3d = Vec3(item.at("xyz")[0].get<double>(), item.at("xyz")[1].get<double>(),
                   item.at("xyz")[2].get<double>());
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("correspondences: ") + e.what());
  }
  return out;
}

/// Pose initialization from a handful of picked 2D-3D correspondences.
/// Multi-start: 32 seeded random view directions around the points'
/// centroid, depth seeded from the projected-extent scale, each polished by
/// solve_pnp; the lowest-rms converged solution below 5 px wins.
inline Pose init_pose_from_points(const std::vector<Correspondence>& corrs,
                                  const CameraIntrinsics& k) {
  if (corrs.size() < 4)
    fail(ErrorCode::InsufficientPoints, "initialization needs at least 4 points");

  Vec3 centroid3 = Vec3::Zero();
  Vec2 centroid2 = Vec2::Zero();
  for (const Correspondence& c : corrs) {
    centroid3 += c.x3d;
    centroid2 += c.uv;
  }
  centroid3 /= static_cast<double>(corrs.size());
  centroid2 /= static_cast<double>(corrs.size());

  double spread3 = 0.0, spread2 = 0.0;
  for (const Correspondence& c : corrs) {
    spread3 += (c.x3d - centroid3).squaredNorm();
    spread2 += (c.uv - centroid2).squaredNorm();
  }
  spread3 = std::sqrt(spread3 / corrs.size());
  spread2 = std::sqrt(spread2 / corrs.size());
  if (spread3 < 1e-12 || spread2 < 1e-9)
    fail(ErrorCode::InitializationFailed, "correspondences have no spatial extent");

  const double depth = 0.5 * (k.fx + k.fy) * spread3 / spread2;

  Rng rng(0x9e3779b97f4a7c15ull);
  PnpResult best;
  bool have_best = false;
  for (int start = 0; start < 32; ++start) {
    // Uniform random rotation from a normalized 4-vector of Gaussian samples.
    Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    Pose guess;
    guess.rotation = quaternion_to_rotation(q);
    guess.translation = centroid3 - depth * (guess.rotation * Vec3(0, 0, 1));

    try {
      const PnpResult r = solve_pnp(corrs, k, guess);
      if (r.converged && r.rms_reprojection < 5.0 &&
          (!have_best || r.rms_reprojection < best.rms_reprojection)) {
        best = r;
        have_best = true;
      }
    } catch (const Error&) {
      // this start diverged or was degenerate; try the next
    }
  }
  if (!have_best)
    fail(ErrorCode::InitializationFailed, "no initialization start converged below 5 px");
  return best.pose;
}

/// Body pose from camera pose and the rig transform (camera-to-body).
/// With an identity rig the body pose equals the camera pose.
inline Pose body_pose(const Pose& camera_pose, const Pose& cam_to_body) {
  return compose(camera_pose, invert(cam_to_body));
}

/// One tracking step: project the model profile at the current pose, detect
/// segments, match control points along their normals, and update the pose
/// by RANSAC + PnP. Pipeline failures mark the frame Lost and hold the pose.
/// Deterministic: the per-frame RANSAC seed is rng_seed XOR frame_index.
inline TrackerState track_frame(const TrackerState& state, const GrayImage& img,
                                const WireframeModel& model,
                                const CameraIntrinsics& k,
                                const TrackerConfig& cfg) {
  TrackerState next = state;
  next.frame_index = state.frame_index + 1;
  if (state.status == TrackStatus::Lost) return next;  // needs re-initialization

  try {
    const std::vector<Segment2D> profile = project_profile(model, state.camera_pose, k);
    const std::vector<Segment2D> segments =
        fuse_parallel_pairs(detect_segments(img, cfg.lsd), cfg.fuse_gap);

    // Ambiguity gating runs against the visible profile only. Occluded edges
    // leave no stroke in the image, so they cannot sponsor confusable
    // evidence — and a near-grazing far edge that surfaces between frames
    // shows up as a second hypothesis, which the consensus step arbitrates.
    // Gating against hidden edges starved near-head-on views below six
    // constraints and let the pose wander along the unconstrained direction.
    const std::vector<ControlPoint> points = filter_ambiguous_points(
        sample_control_points(profile, cfg.spacing), profile, cfg.ambiguity_gap,
        cfg.orient_tol);

    std::vector<MatchSet> matches;
    matches.reserve(points.size());
    for (const ControlPoint& cp : points)
      matches.push_back({cp, search_candidates(cp, segments, cfg.search_radius,
                                               cfg.orient_tol, cfg.k_max)});

    RansacConfig rcfg = cfg.ransac;
    rcfg.rng_seed = cfg.ransac.rng_seed ^ static_cast<uint64_t>(state.frame_index);
    const auto [result, flags] = ransac_pose(matches, k, state.camera_pose, rcfg);

    int inliers = 0;
    for (bool f : flags)
      if (f) ++inliers;

    next.camera_pose = result.pose;
    next.status = TrackStatus::Tracking;
    next.last_inlier_fraction =
        matches.empty() ? 0.0 : static_cast<double>(inliers) / matches.size();
    next.last_rms = result.rms_reprojection;
    next.diagnostics.clear();
  } catch (const Error& e) {
    next.status = TrackStatus::Lost;
    next.camera_pose = state.camera_pose;
    next.last_inlier_fraction = 0.0;
    next.last_rms = 0.0;
    next.diagnostics = error_code_name(e.code());
  }
  return next;
}

}  // namespace edgetrack
