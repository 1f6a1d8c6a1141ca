#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "edgetrack/error.hpp"

namespace edgetrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Depth below which a point counts as behind the camera.
inline constexpr double kDepthEpsilon = 1e-9;

namespace detail {

/// Shortest text that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Rigid transform mapping camera/body-frame coordinates into the world
/// frame (camera-to-world).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }
};

/// Small rigid motion: axis-angle rotation plus translation. Used as the
/// optimizer parameterization.
struct Twist {
  Vec3 rot = Vec3::Zero();
  Vec3 trans = Vec3::Zero();

  double norm() const { return std::sqrt(rot.squaredNorm() + trans.squaredNorm()); }

  Vec6 vector() const {
    Vec6 v;
    v << rot, trans;
    return v;
  }

  static Twist from_vector(const Vec6& v) {
    Twist xi;
    xi.rot = v.head<3>();
    xi.trans = v.tail<3>();
    return xi;
  }
};

/// Pinhole camera with two radial distortion terms.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  int width = 0;
  int height = 0;
};

inline void validate(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0))
    fail(ErrorCode::ParseError, "focal lengths must be positive");
  if (!(k.cx >= 0.0 && k.cx < k.width) || !(k.cy >= 0.0 && k.cy < k.height))
    fail(ErrorCode::ParseError, "principal point outside image");
}

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

/// Returns a∘b: the transform that applies `b` first, then `a`.
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline Pose invert(const Pose& t) {
  Pose out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  return out;
}

inline Vec3 transform_point(const Pose& t, const Vec3& x) {
  return t.rotation * x + t.translation;
}

/// Projects a camera-frame point to pixel coordinates with two radial
/// distortion terms. Throws NonPositiveDepth for z <= kDepthEpsilon.
inline Vec2 project_point(const CameraIntrinsics& k, const Vec3& x_cam) {
  if (x_cam.z() <= kDepthEpsilon)
    fail(ErrorCode::NonPositiveDepth, "point at or behind the camera");
  const double a = x_cam.x() / x_cam.z();
  const double b = x_cam.y() / x_cam.z();
  const double r2 = a * a + b * b;
  const double d = 1.0 + r2 * (k.k1 + r2 * k.k2);
  return {k.fx * a * d + k.cx, k.fy * b * d + k.cy};
}

/// Inverts the radial distortion: pixel -> undistorted normalized image
/// coordinates. Newton iteration on the radial polynomial.
inline Vec2 undistort_point(const CameraIntrinsics& k, const Vec2& uv) {
  const double xd = (uv.x() - k.cx) / k.fx;
  const double yd = (uv.y() - k.cy) / k.fy;
  const double rd = std::sqrt(xd * xd + yd * yd);
  if (rd < 1e-14 || (k.k1 == 0.0 && k.k2 == 0.0)) return {xd, yd};

  double r = rd;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const double r2 = r * r;
    const double f = r * (1.0 + r2 * (k.k1 + r2 * k.k2)) - rd;
    const double df = 1.0 + r2 * (3.0 * k.k1 + 5.0 * k.k2 * r2);
    const double step = f / df;
    r -= step;
    if (std::abs(step) < 1e-15 * std::max(1.0, rd)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    fail(ErrorCode::NoConvergence, "radial undistortion did not converge");
  const double s = r / rd;
  return {xd * s, yd * s};
}

/// Exponential map se(3) -> SE(3).
inline Pose exp_twist(const Twist& xi) {
  const double theta2 = xi.rot.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 K = skew(xi.rot);
  double A, B, C;  // sin t/t, (1-cos t)/t^2, (t-sin t)/t^3
  if (theta < 1e-4) {
    A = 1.0 - theta2 / 6.0;
    B = 0.5 - theta2 / 24.0;
    C = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    A = std::sin(theta) / theta;
    B = (1.0 - std::cos(theta)) / theta2;
    C = (theta - std::sin(theta)) / (theta2 * theta);
  }
  Pose out;
  out.rotation = Mat3::Identity() + A * K + B * K * K;
  const Mat3 V = Mat3::Identity() + B * K + C * K * K;
  out.translation = V * xi.trans;
  return out;
}

/// Logarithm map SE(3) -> se(3). Defined for rotation angles below pi;
/// throws LogNearPi at or near pi where the axis is not unique.
inline Twist log_pose(const Pose& t) {
  const double cos_theta =
      std::clamp((t.rotation.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta >= M_PI - 1e-6)
    fail(ErrorCode::LogNearPi, "rotation angle at or near pi");

  Vec3 vee(t.rotation(2, 1) - t.rotation(1, 2),
           t.rotation(0, 2) - t.rotation(2, 0),
           t.rotation(1, 0) - t.rotation(0, 1));
  Twist xi;
  if (theta < 1e-10) {
    xi.rot = 0.5 * vee;
  } else {
    xi.rot = (theta / (2.0 * std::sin(theta))) * vee;
  }

  const double theta2 = theta * theta;
  const Mat3 K = skew(xi.rot);
  double c;  // coefficient of K^2 in V^{-1}
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double A = std::sin(theta) / theta;
    const double B = (1.0 - std::cos(theta)) / theta2;
    c = (1.0 - A / (2.0 * B)) / theta2;
  }
  const Mat3 v_inv = Mat3::Identity() - 0.5 * K + c * K * K;
  xi.trans = v_inv * t.translation;
  return xi;
}

/// Translation distance (m) and geodesic rotation angle (deg) between poses.
inline std::pair<double, double> pose_error(const Pose& a, const Pose& b) {
  const double dt = (a.translation - b.translation).norm();
  const Mat3 r_rel = a.rotation.transpose() * b.rotation;
  const double c = std::clamp((r_rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double deg = std::acos(c) * 180.0 / M_PI;
  return {dt, deg};
}

/// Unit quaternion (w, x, y, z) with canonical sign: w >= 0, and for w == 0
/// the first nonzero component is positive.
inline Vec4 rotation_to_quaternion(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  Vec4 v(q.w(), q.x(), q.y(), q.z());
  for (int i = 0; i < 4; ++i) {
    if (v[i] > 0.0) break;
    if (v[i] < 0.0) {
      v = -v;
      break;
    }
  }
  return v;
}

inline Mat3 quaternion_to_rotation(const Vec4& wxyz) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  if (q.norm() < 1e-12)
    fail(ErrorCode::ParseError, "zero quaternion");
  q.normalize();
  return q.toRotationMatrix();
}

// ---------------------------------------------------------------------------
// File formats

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  try {
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.k1 = j.at("k1").get<double>();
    k.k2 = j.at("k2").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("intrinsics: ") + e.what());
  }
  validate(k);
  return k;
}

inline nlohmann::json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"width", k.width}, {"height", k.height}, {"fx", k.fx},
          {"fy", k.fy},       {"cx", k.cx},         {"cy", k.cy},
          {"k1", k.k1},       {"k2", k.k2}};
}

inline nlohmann::json parse_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ParseError, "invalid JSON");
  return j;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

inline CameraIntrinsics load_intrinsics(const std::string& path) {
  return intrinsics_from_json(parse_json_text(read_text_file(path)));
}

inline void save_intrinsics(const std::string& path, const CameraIntrinsics& k) {
  write_text_file(path, intrinsics_to_json(k).dump(2) + "\n");
}

inline nlohmann::json pose_to_json(const Pose& p) {
  const Vec4 q = rotation_to_quaternion(p.rotation);
  return {{"t", {p.translation.x(), p.translation.y(), p.translation.z()}},
          {"q", {q[0], q[1], q[2], q[3]}}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  try {
    const auto& t = j.at("t");
    const auto& q = j.at("q");
    if (t.size() != 3 || q.size() != 4)
      fail(ErrorCode::ParseError, "pose needs t[3] and q[4]");
    p.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    p.rotation = quaternion_to_rotation(
        Vec4(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("pose: ") + e.what());
  }
  return p;
}

}  // namespace edgetrack
