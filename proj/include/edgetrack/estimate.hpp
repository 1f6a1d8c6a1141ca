#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SVD>

#include "edgetrack/correspond.hpp"
#include "edgetrack/geometry.hpp"
#include "edgetrack/rng.hpp"

namespace edgetrack {

/// One 3D-2D correspondence for PnP.
struct Correspondence {
  Vec3 x3d = Vec3::Zero();  // model/world frame, meters
  Vec2 uv = Vec2::Zero();   // pixels
};

struct PnpResult {
  Pose pose = Pose::identity();  // camera-to-world
  double rms_reprojection = 0.0;  // px, sqrt(mean squared point error)
  int iterations = 0;
  bool converged = false;
};

struct RansacConfig {
  int max_iterations = 200;
  int sample_size = 4;
  double inlier_threshold = 2.0;     // px
  double min_inlier_fraction = 0.25;
  uint64_t rng_seed = 0;
};

/// A control point together with its candidate image matches.
struct MatchSet {
  ControlPoint point;
  std::vector<MatchHypothesis> hypotheses;
};

/// Jacobian of the reprojection residual project(exp(xi) * T^-1 * x3d) - uv
/// with respect to the left-composed twist xi at 0, columns ordered
/// [rotation | translation]. Includes the radial-distortion derivative.
inline Mat26 jacobian_reprojection(const Vec3& x3d, const Pose& pose,
                                   const CameraIntrinsics& k) {
  const Vec3 x = transform_point(invert(pose), x3d);
  if (x.z() <= kDepthEpsilon)
    fail(ErrorCode::NonPositiveDepth, "point behind camera in jacobian");

  const double z_inv = 1.0 / x.z();
  const double xn = x.x() * z_inv;
  const double yn = x.y() * z_inv;
  const double r2 = xn * xn + yn * yn;
  const double d = 1.0 + r2 * (k.k1 + r2 * k.k2);
  const double dd = k.k1 + 2.0 * k.k2 * r2;  // d(distortion)/d(r2)

  // Pixel coordinates w.r.t. normalized coordinates.
  Eigen::Matrix2d px_n;
  px_n(0, 0) = k.fx * (d + 2.0 * xn * xn * dd);
  px_n(0, 1) = k.fx * (2.0 * xn * yn * dd);
  px_n(1, 0) = k.fy * (2.0 * xn * yn * dd);
  px_n(1, 1) = k.fy * (d + 2.0 * yn * yn * dd);

  // Normalized coordinates w.r.t. the camera-frame point.
  Eigen::Matrix<double, 2, 3> n_cam;
  n_cam << z_inv, 0.0, -xn * z_inv,
           0.0, z_inv, -yn * z_inv;

  // Camera-frame point w.r.t. the twist: dx = omega x x + v.
  Eigen::Matrix<double, 3, 6> cam_twist;
  cam_twist.block<3, 3>(0, 0) = -skew(x);
  cam_twist.block<3, 3>(0, 3) = Mat3::Identity();

  return px_n * n_cam * cam_twist;
}

namespace detail {

/// Sum of squared reprojection errors for the world-to-camera transform w2c,
/// +inf if any point falls behind the camera.
inline double pnp_cost(const std::vector<Correspondence>& corrs,
                       const CameraIntrinsics& k, const Pose& w2c) {
  double cost = 0.0;
  for (const Correspondence& c : corrs) {
    const Vec3 x = transform_point(w2c, c.x3d);
    if (x.z() <= kDepthEpsilon) return std::numeric_limits<double>::infinity();
    cost += (project_point(k, x) - c.uv).squaredNorm();
  }
  return cost;
}

}  // namespace detail

/// Iterative PnP: Gauss-Newton steps on the 6-twist, left-composed onto the
/// world-to-camera transform, with Levenberg damping engaged whenever a step
/// fails to reduce the cost. Accepted steps never increase the cost.
inline PnpResult solve_pnp(const std::vector<Correspondence>& corrs,
                           const CameraIntrinsics& k, const Pose& init,
                           int max_iter = 50) {
  const int n = static_cast<int>(corrs.size());
  if (n < 4) fail(ErrorCode::InsufficientPoints, "PnP needs at least 4 points");

  Pose w2c = invert(init);
  double cost = detail::pnp_cost(corrs, k, w2c);
  if (std::isinf(cost))
    fail(ErrorCode::DivergedBehindCamera, "initial pose puts a point behind the camera");

  PnpResult result;
  double lambda = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    const Pose cam_pose = invert(w2c);
    for (const Correspondence& c : corrs) {
      const Mat26 j = jacobian_reprojection(c.x3d, cam_pose, k);
      const Vec2 r = project_point(k, transform_point(w2c, c.x3d)) - c.uv;
      h += j.transpose() * j;
      g += j.transpose() * r;
    }

    const Eigen::JacobiSVD<Mat6> svd(h);
    const double smin = svd.singularValues()(5);
    if (smin <= 0.0 || svd.singularValues()(0) / smin > 1e12)
      fail(ErrorCode::DegenerateConfiguration, "normal equations near-singular");

    // Damped step; lambda grows until the cost decreases.
    bool accepted = false;
    Vec6 delta = Vec6::Zero();
    for (int attempt = 0; attempt < 32; ++attempt) {
      delta = -(h + lambda * Mat6::Identity()).ldlt().solve(g);
      const Pose cand = compose(exp_twist(Twist::from_vector(delta)), w2c);
      const double cand_cost = detail::pnp_cost(corrs, k, cand);
      if (cand_cost <= cost) {
        w2c = cand;
        cost = cand_cost;
        lambda *= 0.5;
        accepted = true;
        break;
      }
      lambda = std::max(lambda * 10.0, 1e-6);
    }
    if (!accepted) break;  // no improving step found

    ++result.iterations;
    if (delta.norm() < 1e-8) {
      result.converged = true;
      break;
    }
  }

  result.pose = invert(w2c);
  result.rms_reprojection = std::sqrt(cost / n);
  return result;
}

namespace detail {

struct InlierScore {
  int count = 0;
  double rms = std::numeric_limits<double>::infinity();
  std::vector<bool> flags;
  std::vector<int> selected;  // chosen hypothesis per control point, -1 if none
};

/// Scores a candidate pose. A match along a projected edge is a 1-D
/// measurement: only the component of the prediction error along the control
/// point's edge normal is meaningful — displacement along the edge carries no
/// information and must not be penalized, or the estimator anchors to the
/// prior and cannot follow motion along edges. A control point is an inlier
/// if ANY of its hypotheses has a normal-component error within `threshold`
/// px of the pose's reprojection of x3d; the closest such is selected.
inline InlierScore score_pose(const std::vector<MatchSet>& matches,
                              const CameraIntrinsics& k, const Pose& pose,
                              double threshold) {
  InlierScore score;
  score.flags.assign(matches.size(), false);
  score.selected.assign(matches.size(), -1);
  const Pose w2c = invert(pose);
  double sum_sq = 0.0;
  score.count = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vec3 x = transform_point(w2c, matches[i].point.x3d);
    if (x.z() <= kDepthEpsilon) continue;
    const Vec2 uv_pred = project_point(k, x);
    const Vec2& n = matches[i].point.edge_normal;
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (std::size_t j = 0; j < matches[i].hypotheses.size(); ++j) {
      const double dist =
          std::abs(n.dot(matches[i].hypotheses[j].uv_matched - uv_pred));
      if (dist < best) {
        best = dist;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j >= 0 && best <= threshold) {
      score.flags[i] = true;
      score.selected[i] = best_j;
      sum_sq += best * best;
      ++score.count;
    }
  }
  score.rms = score.count > 0 ? std::sqrt(sum_sq / score.count)
                              : std::numeric_limits<double>::infinity();
  return score;
}

/// One 1-D constraint: the reprojection of x3d must land on the line through
/// uv perpendicular to `normal`.
struct NormalConstraint {
  Vec3 x3d = Vec3::Zero();
  Vec2 uv = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // unit
};

inline double normal_cost(const std::vector<NormalConstraint>& cons,
                          const CameraIntrinsics& k, const Pose& w2c) {
  double cost = 0.0;
  for (const NormalConstraint& c : cons) {
    const Vec3 x = transform_point(w2c, c.x3d);
    if (x.z() <= kDepthEpsilon) return std::numeric_limits<double>::infinity();
    const double r = c.normal.dot(project_point(k, x) - c.uv);
    cost += r * r;
  }
  return cost;
}

/// Gauss-Newton on 1-D normal residuals; same stepping, damping and error
/// policy as solve_pnp. Needs enough constraints with distinct normal
/// directions to determine all six degrees of freedom.
inline PnpResult refine_pose_normals(const std::vector<NormalConstraint>& cons,
                                     const CameraIntrinsics& k, const Pose& init,
                                     int max_iter = 50) {
  const int n = static_cast<int>(cons.size());
  if (n < 6)
    fail(ErrorCode::InsufficientPoints, "normal refinement needs at least 6 constraints");

  Pose w2c = invert(init);
  double cost = normal_cost(cons, k, w2c);
  if (std::isinf(cost))
    fail(ErrorCode::DivergedBehindCamera, "initial pose puts a point behind the camera");

  PnpResult result;
  double lambda = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    const Pose cam_pose = invert(w2c);
    for (const NormalConstraint& c : cons) {
      const Mat26 j2 = jacobian_reprojection(c.x3d, cam_pose, k);
      const Eigen::Matrix<double, 1, 6> j = c.normal.transpose() * j2;
      const double r =
          c.normal.dot(project_point(k, transform_point(w2c, c.x3d)) - c.uv);
      h += j.transpose() * j;
      g += j.transpose() * r;
    }

    const Eigen::JacobiSVD<Mat6> svd(h);
    const double smin = svd.singularValues()(5);
    if (smin <= 0.0 || svd.singularValues()(0) / smin > 1e12)
      fail(ErrorCode::DegenerateConfiguration, "normal equations near-singular");

    bool accepted = false;
    Vec6 delta = Vec6::Zero();
    for (int attempt = 0; attempt < 32; ++attempt) {
      delta = -(h + lambda * Mat6::Identity()).ldlt().solve(g);
      const Pose cand = compose(exp_twist(Twist::from_vector(delta)), w2c);
      const double cand_cost = normal_cost(cons, k, cand);
      if (cand_cost <= cost) {
        w2c = cand;
        cost = cand_cost;
        lambda *= 0.5;
        accepted = true;
        break;
      }
      lambda = std::max(lambda * 10.0, 1e-6);
    }
    if (!accepted) break;

    ++result.iterations;
    if (delta.norm() < 1e-8) {
      result.converged = true;
      break;
    }
  }

  result.pose = invert(w2c);
  result.rms_reprojection = std::sqrt(cost / n);
  return result;
}

inline int nearest_hypothesis(const MatchSet& m) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m.hypotheses.size(); ++j)
    if (std::abs(m.hypotheses[j].signed_distance) < best_d) {
      best_d = std::abs(m.hypotheses[j].signed_distance);
      best = static_cast<int>(j);
    }
  return best;
}

}  // namespace detail

/// RANSAC over multi-hypothesis matches. Each iteration solves PnP from the
/// prior on the nearest hypotheses of a random minimal sample; candidates
/// are scored by inlier count of the normal-component error (tie: lower
/// inlier rms, then earlier iteration). Every promising candidate — and the
/// prior itself, which competes as candidate zero — is locally optimized:
/// refined on 1-D normal constraints selected at a shrinking threshold
/// (4x, 2x, then the final 1x), re-scoring each iterate at the final
/// threshold. The wide first selection matters because minimal-sample
/// candidates are biased — solve_pnp treats the 1-D foot points as full 2-D
/// measurements, and their along-edge error grows with the prior's offset —
/// so the true consensus often sits just outside the strict band around a
/// raw candidate. Deterministic for a fixed cfg.rng_seed (the optimization
/// draws no randomness). Inlier fraction is measured against all control
/// points passed in, matched or not.
inline std::pair<PnpResult, std::vector<bool>> ransac_pose(
    const std::vector<MatchSet>& matches, const CameraIntrinsics& k,
    const Pose& prior, const RansacConfig& cfg) {
  std::vector<int> matched;
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (!matches[i].hypotheses.empty()) matched.push_back(static_cast<int>(i));
  if (static_cast<int>(matched.size()) < cfg.sample_size)
    fail(ErrorCode::NotEnoughMatches,
         "fewer matched control points than the RANSAC sample size");

  const auto better = [](const detail::InlierScore& a,
                         const detail::InlierScore& b) {
    return a.count > b.count || (a.count == b.count && a.rms < b.rms);
  };

  // Local optimization: refine on the constraints selected around the
  // current pose, wide bands first, and keep the iterate that scores best at
  // the final threshold. If every refinement scores worse than the input
  // candidate, the candidate stands unrefined.
  const auto optimize = [&](const Pose& cand, detail::InlierScore cand_score)
      -> std::pair<PnpResult, detail::InlierScore> {
    static constexpr double kBand[] = {4.0, 2.0, 1.0, 1.0, 1.0};
    PnpResult out;
    out.pose = cand;
    out.rms_reprojection = cand_score.rms;
    out.iterations = 0;
    out.converged = true;
    detail::InlierScore out_score = std::move(cand_score);

    Pose cur_pose = cand;
    std::vector<int> prev_selected;
    for (double band : kBand) {
      const detail::InlierScore sel = detail::score_pose(
          matches, k, cur_pose, cfg.inlier_threshold * band);
      std::vector<detail::NormalConstraint> cons;
      for (std::size_t i = 0; i < matches.size(); ++i)
        if (sel.flags[i])
          cons.push_back({matches[i].point.x3d,
                          matches[i].hypotheses[sel.selected[i]].uv_matched,
                          matches[i].point.edge_normal});
      PnpResult refined;
      try {
        refined = detail::refine_pose_normals(cons, k, cur_pose);
      } catch (const Error&) {
        break;  // refinement degenerated; keep what we have
      }
      const detail::InlierScore score =
          detail::score_pose(matches, k, refined.pose, cfg.inlier_threshold);
      if (better(score, out_score)) {
        out = refined;
        out_score = score;
      }
      if (band == 1.0 && score.selected == prev_selected) break;  // fixed point
      prev_selected = score.selected;
      cur_pose = refined.pose;
    }
    return {out, out_score};
  };

  PnpResult best_result;
  detail::InlierScore best;
  {
    detail::InlierScore score =
        detail::score_pose(matches, k, prior, cfg.inlier_threshold);
    auto [result, opt_score] = optimize(prior, std::move(score));
    best_result = result;
    best = std::move(opt_score);
  }

  Rng rng(cfg.rng_seed);
  std::vector<int> pool = matched;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // Partial Fisher-Yates: the first sample_size entries of pool.
    for (int i = 0; i < cfg.sample_size; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<Correspondence> sample;
    for (int i = 0; i < cfg.sample_size; ++i) {
      const MatchSet& m = matches[pool[i]];
      sample.push_back({m.point.x3d,
                        m.hypotheses[detail::nearest_hypothesis(m)].uv_matched});
    }

    Pose cand;
    try {
      cand = solve_pnp(sample, k, prior).pose;
    } catch (const Error&) {
      continue;  // degenerate or infeasible sample
    }

    const detail::InlierScore score =
        detail::score_pose(matches, k, cand, cfg.inlier_threshold);
    // Wide-band optimization can rescue candidates that score modestly at
    // the final threshold, so anything at half the best count gets a shot.
    if (score.count * 2 < best.count) continue;
    auto [result, opt_score] = optimize(cand, score);
    if (better(opt_score, best)) {
      best_result = result;
      best = std::move(opt_score);
    }
  }

  const double fraction =
      matches.empty() ? 0.0 : static_cast<double>(best.count) / matches.size();
  if (fraction < cfg.min_inlier_fraction)
    fail(ErrorCode::NoConsensus, "best inlier fraction below minimum");

  return {best_result, best.flags};
}

}  // namespace edgetrack
