#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgetrack/image.hpp"
#include "edgetrack/rng.hpp"
#include "edgetrack/trajectory.hpp"
#include "edgetrack/wiremodel.hpp"

namespace edgetrack {

/// Circular camera path around a target, optical axis through look_at.
struct OrbitSpec {
  double radius = 3.0;       // m
  double height = 0.0;       // m, orbit plane offset from center
  Vec3 center = Vec3::Zero();
  double revolutions = 1.0;
  int n_frames = 200;
  Vec3 look_at = Vec3::Zero();
};

/// Synthetic edge-image rendering knobs.
struct RenderSpec {
  double edge_contrast = 96.0;    // intensity drop below the background
  double blur_sigma = 0.6;        // px
  double noise_sigma = 0.5;       // intensity
  int n_clutter = 0;              // distractor segments
  double dropout_fraction = 0.0;  // of each edge's length
  uint64_t rng_seed = 1;
};

struct TrajectoryMetrics {
  double translation_rmse = 0.0;  // m
  double translation_max = 0.0;   // m
  double rotation_rmse_deg = 0.0;
  double rotation_max_deg = 0.0;
  double tracked_fraction = 0.0;
  int n_frames = 0;
  int n_tracked = 0;
};

/// Roll-free look-at orientation: world +z is up, camera x right, y down,
/// z forward through the target.
inline Pose look_at_pose(const Vec3& camera_center, const Vec3& target) {
  const Vec3 to_target = target - camera_center;
  if (to_target.norm() < 1e-12)
    fail(ErrorCode::LookAtDegenerate, "camera center coincides with look-at target");
  const Vec3 z = to_target.normalized();
  Vec3 x = z.cross(Vec3(0.0, 0.0, 1.0));
  if (x.norm() < 1e-9)
    fail(ErrorCode::LookAtDegenerate, "view direction parallel to the up axis");
  x.normalize();
  const Vec3 y = z.cross(x);
  Pose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = camera_center;
  return pose;
}

inline std::vector<Pose> make_orbit(const OrbitSpec& spec) {
  if (spec.radius <= 0.0 || spec.n_frames < 1)
    fail(ErrorCode::ParseError, "invalid orbit spec");
  std::vector<Pose> poses;
  for (int i = 0; i < spec.n_frames; ++i) {
    const double angle = 2.0 * M_PI * spec.revolutions * i / spec.n_frames;
    const Vec3 center = spec.center + Vec3(spec.radius * std::cos(angle),
                                           spec.radius * std::sin(angle),
                                           spec.height);
    poses.push_back(look_at_pose(center, spec.look_at));
  }
  return poses;
}

namespace detail {

/// Accumulates anti-aliased line coverage (max-blend, order-independent).
/// The drawn line is ~2 px wide with a 1 px soft falloff.
inline void rasterize_segment(std::vector<double>& alpha, int width, int height,
                              const Vec2& p0, const Vec2& p1) {
  constexpr double kHalfWidth = 1.0;
  const Vec2 d = p1 - p0;
  const double len = d.norm();
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(p0.x(), p1.x()) - kHalfWidth - 1.0)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(p0.x(), p1.x()) + kHalfWidth + 1.0)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(p0.y(), p1.y()) - kHalfWidth - 1.0)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(p0.y(), p1.y()) + kHalfWidth + 1.0)));

  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);  // pixel center
      double dist;
      if (len < 1e-12) {
        dist = (p - p0).norm();
      } else {
        const double t = std::clamp((p - p0).dot(d) / (len * len), 0.0, 1.0);
        dist = (p - (p0 + t * d)).norm();
      }
      const double a = std::clamp(kHalfWidth + 0.5 - dist, 0.0, 1.0);
      if (a > 0.0) {
        double& cell = alpha[static_cast<std::size_t>(y) * width + x];
        cell = std::max(cell, a);
      }
    }
}

inline void gaussian_blur_inplace(std::vector<double>& img, int width, int height,
                                  double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
    sum += kernel[i + radius];
  }
  for (double& v : kernel) v /= sum;

  std::vector<double> tmp(img.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xi = std::clamp(x + i, 0, width - 1);
        acc += img[static_cast<std::size_t>(y) * width + xi] * kernel[i + radius];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  for (int x = 0; x < width; ++x)
    for (int y = 0; y < height; ++y) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yi = std::clamp(y + i, 0, height - 1);
        acc += tmp[static_cast<std::size_t>(yi) * width + x] * kernel[i + radius];
      }
      img[static_cast<std::size_t>(y) * width + x] = acc;
    }
}

}  // namespace detail

/// Renders the model's visible profile over a mid-gray background: dark
/// anti-aliased lines, optional per-edge dropout runs and clutter segments,
/// Gaussian blur, then seeded additive Gaussian noise. Returns the clean
/// (pre-noise, pre-dropout) projected profile as ground truth.
inline std::pair<GrayImage, std::vector<Segment2D>> render_frame(
    const WireframeModel& model, const Pose& pose, const CameraIntrinsics& k,
    const RenderSpec& spec) {
  if (spec.dropout_fraction < 0.0 || spec.dropout_fraction >= 1.0 ||
      spec.noise_sigma < 0.0 || spec.n_clutter < 0)
    fail(ErrorCode::ParseError, "invalid render spec");

  const std::vector<Segment2D> truth = project_profile(model, pose, k);
  Rng rng(spec.rng_seed);

  std::vector<double> alpha(static_cast<std::size_t>(k.width) * k.height, 0.0);
  for (const Segment2D& seg : truth) {
    if (spec.dropout_fraction <= 0.0) {
      detail::rasterize_segment(alpha, k.width, k.height, seg.p0, seg.p1);
      continue;
    }
    // One contiguous dropped run per edge at a seeded random position.
    const double run = spec.dropout_fraction;
    const double start = rng.uniform() * (1.0 - run);
    const Vec2 d = seg.p1 - seg.p0;
    detail::rasterize_segment(alpha, k.width, k.height, seg.p0, seg.p0 + start * d);
    detail::rasterize_segment(alpha, k.width, k.height, seg.p0 + (start + run) * d, seg.p1);
  }

  for (int i = 0; i < spec.n_clutter; ++i) {
    const Vec2 center(rng.uniform(0.0, k.width), rng.uniform(0.0, k.height));
    const double angle = rng.uniform(0.0, M_PI);
    const double half_len = 0.5 * rng.uniform(20.0, 120.0);
    const Vec2 d(std::cos(angle) * half_len, std::sin(angle) * half_len);
    detail::rasterize_segment(alpha, k.width, k.height, center - d, center + d);
  }

  const double background = 128.0;
  const double line = std::max(0.0, background - spec.edge_contrast);
  std::vector<double> img(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    img[i] = background + alpha[i] * (line - background);

  detail::gaussian_blur_inplace(img, k.width, k.height, spec.blur_sigma);

  GrayImage out;
  out.width = k.width;
  out.height = k.height;
  out.pixels.resize(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double noisy = img[i] + (spec.noise_sigma > 0.0 ? rng.normal(0.0, spec.noise_sigma) : 0.0);
    out.pixels[i] = static_cast<uint8_t>(std::clamp(std::lround(noisy), 0l, 255l));
  }
  return {std::move(out), truth};
}

/// Trajectory error metrics over frames whose status is Tracking.
inline TrajectoryMetrics evaluate_trajectory(const std::vector<TrajectoryRow>& estimated,
                                             const std::vector<Pose>& truth) {
  if (estimated.size() != truth.size())
    fail(ErrorCode::LengthMismatch, "estimate and truth trajectories differ in length");

  TrajectoryMetrics m;
  m.n_frames = static_cast<int>(estimated.size());
  double sum_t2 = 0.0, sum_r2 = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    if (!estimated[i].tracking) continue;
    const auto [terr, rerr] = pose_error(estimated[i].pose, truth[i]);
    sum_t2 += terr * terr;
    sum_r2 += rerr * rerr;
    m.translation_max = std::max(m.translation_max, terr);
    m.rotation_max_deg = std::max(m.rotation_max_deg, rerr);
    ++m.n_tracked;
  }
  if (m.n_tracked > 0) {
    m.translation_rmse = std::sqrt(sum_t2 / m.n_tracked);
    m.rotation_rmse_deg = std::sqrt(sum_r2 / m.n_tracked);
  }
  m.tracked_fraction =
      m.n_frames > 0 ? static_cast<double>(m.n_tracked) / m.n_frames : 0.0;
  return m;
}

/// Poses expressed relative to the first one: r_i = first^-1 * p_i.
inline std::vector<Pose> relative_to_first(const std::vector<Pose>& poses) {
  std::vector<Pose> out;
  if (poses.empty()) return out;
  const Pose inv0 = invert(poses[0]);
  for (const Pose& p : poses) out.push_back(compose(inv0, p));
  return out;
}

/// Intrinsic yaw/pitch/roll (z-y-x) of a rotation, degrees. pitch is in
/// [-90, 90]; at gimbal lock roll is folded into yaw.
inline Vec3 rotation_to_ypr_deg(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double yaw, roll;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    yaw = std::atan2(r(1, 0), r(0, 0));
    roll = std::atan2(r(2, 1), r(2, 2));
  } else {
    yaw = std::atan2(-r(0, 1), r(1, 1));
    roll = 0.0;
  }
  constexpr double deg = 180.0 / M_PI;
  return Vec3(yaw * deg, pitch * deg, roll * deg);
}

}  // namespace edgetrack
