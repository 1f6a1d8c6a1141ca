#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "edgetrack/geometry.hpp"

namespace edgetrack {

/// Planar checkerboard described by its inner-corner grid.
struct BoardSpec {
  int inner_corners_x = 6;
  int inner_corners_y = 7;
  double square_size = 0.025;  // meters
};

/// Detected corners of one view, row-major board order.
struct CalibrationView {
  std::vector<Vec2> corners;  // pixels
};

struct CalibrationResult {
  CameraIntrinsics intrinsics;
  std::vector<Pose> view_poses;  // camera-to-world, board plane z=0
  double rms = 0.0;              // px, sqrt(mean squared corner error)
  int iterations = 0;
};

/// Board corner positions (z = 0 plane), row-major to match view corners.
inline std::vector<Vec2> board_points(const BoardSpec& board) {
  std::vector<Vec2> pts;
  for (int j = 0; j < board.inner_corners_y; ++j)
    for (int i = 0; i < board.inner_corners_x; ++i)
      pts.emplace_back(i * board.square_size, j * board.square_size);
  return pts;
}

/// Normalized direct-linear-transform homography (algebraic least squares),
/// scaled so h33 = 1.
inline Mat3 estimate_homography(const std::vector<Vec2>& board_pts,
                                const std::vector<Vec2>& img_pts) {
  const std::size_t n = board_pts.size();
  if (n != img_pts.size())
    fail(ErrorCode::LengthMismatch, "homography point lists differ in length");
  if (n < 4)
    fail(ErrorCode::DegenerateConfiguration, "homography needs at least 4 points");

  // Hartley normalization: centroid to origin, mean distance sqrt(2).
  const auto normalizer = [](const std::vector<Vec2>& pts) {
    Vec2 c = Vec2::Zero();
    for (const Vec2& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const Vec2& p : pts) mean_dist += (p - c).norm();
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Mat3 t = Mat3::Identity();
    t(0, 0) = t(1, 1) = s;
    t(0, 2) = -s * c.x();
    t(1, 2) = -s * c.y();
    return t;
  };
  const Mat3 tb = normalizer(board_pts);
  const Mat3 ti = normalizer(img_pts);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 X = tb * Vec3(board_pts[i].x(), board_pts[i].y(), 1.0);
    const Vec3 x = ti * Vec3(img_pts[i].x(), img_pts[i].y(), 1.0);
    a.row(2 * i) << -X.x(), -X.y(), -1.0, 0.0, 0.0, 0.0, x.x() * X.x(),
        x.x() * X.y(), x.x();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -X.x(), -X.y(), -1.0, x.y() * X.x(),
        x.y() * X.y(), x.y();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  if (svd.singularValues()(7) < 1e-9 * svd.singularValues()(0))
    fail(ErrorCode::DegenerateConfiguration, "homography system rank-deficient");
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);

  Mat3 hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 result = ti.inverse() * hn * tb;
  if (std::abs(result(2, 2)) < 1e-12)
    fail(ErrorCode::DegenerateConfiguration, "homography h33 vanishes");
  return result / result(2, 2);
}

namespace detail {

/// Row of the zero-skew absolute-conic system for h_i^T B h_j with
/// b = (B11, B22, B13, B23, B33).
inline Eigen::Matrix<double, 1, 5> conic_row(const Mat3& h, int i, int j) {
  Eigen::Matrix<double, 1, 5> v;
  v << h(0, i) * h(0, j), h(1, i) * h(1, j), h(2, i) * h(0, j) + h(0, i) * h(2, j),
      h(2, i) * h(1, j) + h(1, i) * h(2, j), h(2, i) * h(2, j);
  return v;
}

/// Closed-form extrinsics from a homography given intrinsics; board frame is
/// the world frame (z = 0 plane). Returns world-to-camera.
inline Pose extrinsics_from_homography(const Mat3& h, const CameraIntrinsics& k) {
  Mat3 kmat;
  kmat << k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0;
  const Mat3 kinv = kmat.inverse();
  Vec3 r1 = kinv * h.col(0);
  Vec3 r2 = kinv * h.col(1);
  Vec3 t = kinv * h.col(2);
  const double lambda = 1.0 / r1.norm();
  r1 *= lambda;
  r2 *= lambda;
  t *= lambda;
  if (t.z() < 0.0) {  // board must sit in front of the camera
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r_approx;
  r_approx.col(0) = r1;
  r_approx.col(1) = r2;
  r_approx.col(2) = r1.cross(r2);

  // Nearest rotation in Frobenius norm.
  const Eigen::JacobiSVD<Mat3> svd(r_approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  Pose w2c;
  w2c.rotation = r;
  w2c.translation = t;
  return w2c;
}

/// Stacked reprojection residuals for the refinement parameter vector:
/// [fx, fy, cx, cy, k1, k2, then per view a 6-twist correction
/// left-composed onto that view's base world-to-camera transform]. The
/// delta parameterization keeps the rotation away from the log map's pi
/// singularity regardless of board orientation.
inline Eigen::VectorXd calib_residuals(const Eigen::VectorXd& params,
                                       const std::vector<Vec2>& board,
                                       const std::vector<CalibrationView>& views,
                                       const std::vector<Pose>& base_w2c) {
  const std::size_t n_views = views.size();
  const std::size_t n_pts = board.size();
  Eigen::VectorXd r(2 * n_views * n_pts);

  CameraIntrinsics k;
  k.fx = params(0);
  k.fy = params(1);
  k.cx = params(2);
  k.cy = params(3);
  k.k1 = params(4);
  k.k2 = params(5);
  k.width = 0;  // unused by project_point
  k.height = 0;

  std::size_t at = 0;
  for (std::size_t v = 0; v < n_views; ++v) {
    Twist xi;
    xi.rot = params.segment<3>(6 + 6 * v);
    xi.trans = params.segment<3>(9 + 6 * v);
    const Pose w2c = compose(exp_twist(xi), base_w2c[v]);
    for (std::size_t i = 0; i < n_pts; ++i) {
      const Vec3 x = transform_point(w2c, Vec3(board[i].x(), board[i].y(), 0.0));
      Vec2 uv;
      if (x.z() <= kDepthEpsilon)
        uv = Vec2(1e6, 1e6);  // push infeasible configurations away
      else
        uv = project_point(k, x);
      r.segment<2>(at) = uv - views[v].corners[i];
      at += 2;
    }
  }
  return r;
}

}  // namespace detail

/// Planar calibration: per-view DLT homographies, closed-form intrinsics
/// from the absolute-conic constraints (zero skew), extrinsics from the
/// homography columns, then joint Levenberg-Marquardt refinement of
/// {fx, fy, cx, cy, k1, k2} and all view transforms with a numeric
/// central-difference Jacobian. image_width/height are carried into the
/// result (0 = derive from the refined principal point).
inline CalibrationResult calibrate_planar(const BoardSpec& board,
                                          const std::vector<CalibrationView>& views,
                                          int image_width = 0, int image_height = 0) {
  if (board.inner_corners_x < 2 || board.inner_corners_y < 2 || board.square_size <= 0.0)
    fail(ErrorCode::ParseError, "invalid board spec");
  if (views.size() < 3)
    fail(ErrorCode::InsufficientViews, "planar calibration needs at least 3 views");

  const std::vector<Vec2> board2 = board_points(board);
  for (const CalibrationView& v : views)
    if (v.corners.size() != board2.size())
      fail(ErrorCode::LengthMismatch, "view corner count does not match the board");

  std::vector<Mat3> homographies;
  for (const CalibrationView& v : views)
    homographies.push_back(estimate_homography(board2, v.corners));

  // Absolute-conic system: two equations per view.
  Eigen::MatrixXd vmat(2 * views.size(), 5);
  for (std::size_t i = 0; i < homographies.size(); ++i) {
    vmat.row(2 * i) = detail::conic_row(homographies[i], 0, 1);
    vmat.row(2 * i + 1) =
        detail::conic_row(homographies[i], 0, 0) - detail::conic_row(homographies[i], 1, 1);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(vmat, Eigen::ComputeThinV);
  if (svd.singularValues()(3) < 1e-9 * svd.singularValues()(0))
    fail(ErrorCode::DegenerateMotion, "conic system rank-deficient (views lack rotation)");
  Eigen::Matrix<double, 5, 1> b = svd.matrixV().col(4);
  if (b(0) < 0.0) b = -b;

  const double b11 = b(0), b22 = b(1), b13 = b(2), b23 = b(3), b33 = b(4);
  if (b11 <= 0.0 || b22 <= 0.0)
    fail(ErrorCode::DegenerateMotion, "conic solution not positive definite");
  const double cx0 = -b13 / b11;
  const double cy0 = -b23 / b22;
  const double lambda = b33 - b13 * b13 / b11 - b23 * b23 / b22;
  if (lambda / b11 <= 0.0 || lambda / b22 <= 0.0)
    fail(ErrorCode::DegenerateMotion, "conic solution yields imaginary focal length");

  CameraIntrinsics k0;
  k0.fx = std::sqrt(lambda / b11);
  k0.fy = std::sqrt(lambda / b22);
  k0.cx = cx0;
  k0.cy = cy0;
  k0.k1 = 0.0;
  k0.k2 = 0.0;

  // Parameter vector for joint refinement; view twists start at zero around
  // the closed-form extrinsics.
  std::vector<Pose> base_w2c;
  for (const Mat3& h : homographies)
    base_w2c.push_back(detail::extrinsics_from_homography(h, k0));
  const std::size_t n_params = 6 + 6 * views.size();
  Eigen::VectorXd params(n_params);
  params << k0.fx, k0.fy, k0.cx, k0.cy, 0.0, 0.0,
      Eigen::VectorXd::Zero(6 * views.size());

  Eigen::VectorXd residual = detail::calib_residuals(params, board2, views, base_w2c);
  double cost = residual.squaredNorm();

  double mu = 1e-3;
  int iterations = 0;
  for (int iter = 0; iter < 100; ++iter) {
    // Central-difference Jacobian.
    Eigen::MatrixXd jac(residual.size(), n_params);
    for (std::size_t p = 0; p < n_params; ++p) {
      const double h = 1e-6 * std::max(1.0, std::abs(params(p)));
      Eigen::VectorXd plus = params, minus = params;
      plus(p) += h;
      minus(p) -= h;
      jac.col(p) = (detail::calib_residuals(plus, board2, views, base_w2c) -
                    detail::calib_residuals(minus, board2, views, base_w2c)) /
                   (2.0 * h);
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * residual;

    bool accepted = false;
    Eigen::VectorXd delta;
    for (int attempt = 0; attempt < 24; ++attempt) {
      delta = -(jtj + mu * Eigen::MatrixXd::Identity(n_params, n_params)).ldlt().solve(jtr);
      const Eigen::VectorXd cand = params + delta;
      const Eigen::VectorXd cand_res = detail::calib_residuals(cand, board2, views, base_w2c);
      const double cand_cost = cand_res.squaredNorm();
      if (cand_cost <= cost) {
        params = cand;
        residual = cand_res;
        cost = cand_cost;
        mu = std::max(mu * 0.3, 1e-12);
        accepted = true;
        break;
      }
      mu *= 10.0;
    }
    ++iterations;
    if (!accepted || delta.norm() < 1e-10) break;
  }

  if (!std::isfinite(cost))
    fail(ErrorCode::NoConvergence, "calibration refinement diverged");

  CalibrationResult result;
  result.intrinsics.fx = params(0);
  result.intrinsics.fy = params(1);
  result.intrinsics.cx = params(2);
  result.intrinsics.cy = params(3);
  result.intrinsics.k1 = params(4);
  result.intrinsics.k2 = params(5);
  result.intrinsics.width =
      image_width > 0 ? image_width : static_cast<int>(std::lround(2.0 * params(2)));
  result.intrinsics.height =
      image_height > 0 ? image_height : static_cast<int>(std::lround(2.0 * params(3)));
  for (std::size_t v = 0; v < views.size(); ++v) {
    Twist xi;
    xi.rot = params.segment<3>(6 + 6 * v);
    xi.trans = params.segment<3>(9 + 6 * v);
    result.view_poses.push_back(invert(compose(exp_twist(xi), base_w2c[v])));
  }
  const std::size_t total_pts = views.size() * board2.size();
  result.rms = std::sqrt(cost / total_pts);
  result.iterations = iterations;
  return result;
}

/// Parses the calibration input file:
/// {"board":{"nx":6,"ny":7,"square_m":0.025},
///  "views":[{"corners":[[u,v],...]},...],
///  "width":640,"height":480}   (width/height optional)
struct CalibrationInput {
  BoardSpec board;
  std::vector<CalibrationView> views;
  int width = 0;
  int height = 0;
};

inline CalibrationInput calibration_input_from_json(const std::string& text) {
  const nlohmann::json j = parse_json_text(text);
  CalibrationInput input;
  try {
    input.board.inner_corners_x = j.at("board").at("nx").get<int>();
    input.board.inner_corners_y = j.at("board").at("ny").get<int>();
    input.board.square_size = j.at("board").at("square_m").get<double>();
    if (j.contains("width")) input.width = j.at("width").get<int>();
    if (j.contains("height")) input.height = j.at("height").get<int>();
    for (const auto& view : j.at("views")) {
      CalibrationView v;
      for (const auto& c : view.at("corners"))
        v.corners.emplace_back(c[0].get<double>(), c[1].get<double>());
      input.views.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("calibration input: ") + e.what());
  }
  return input;
}

}  // namespace edgetrack
