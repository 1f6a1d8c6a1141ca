#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "edgetrack/calibrate.hpp"
#include "edgetrack/rng.hpp"
#include "edgetrack/simulate.hpp"

using namespace edgetrack;

namespace {

CameraIntrinsics truth_intrinsics() {
  CameraIntrinsics k;
  k.fx = 600.0;
  k.fy = 590.0;
  k.cx = 322.0;
  k.cy = 238.0;
  k.k1 = -0.08;
  k.k2 = 0.0;
  k.width = 640;
  k.height = 480;
  return k;
}

/// Camera placements posed directly in camera coordinates: the board spins
/// about its normal, tilts alternate between the camera's x and y axes, and
/// the footprint slides around the frame on an offset ellipse. The spin/tilt
/// diversity conditions the absolute-conic system; the frame coverage makes
/// the distortion observable under noise.
std::vector<Pose> board_views(const BoardSpec& board, int n, double depth = 0.30) {
  const Vec3 centroid(0.5 * (board.inner_corners_x - 1) * board.square_size,
                      0.5 * (board.inner_corners_y - 1) * board.square_size, 0.0);
  std::vector<Pose> poses;
  for (int i = 0; i < n; ++i) {
    const double spin = 2.0 * M_PI * i / n;
    const double tilt =
        (20.0 + 14.0 * (i % 3)) * M_PI / 180.0 * (i % 2 ? 1.0 : -1.0);
    const Vec3 tilt_axis = (i % 2) ? Vec3::UnitY() : Vec3::UnitX();
    const double ca = 2.0 * M_PI * i / 8.0;
    const Vec2 off = i == 0 ? Vec2(0, 0)
                            : Vec2(0.055 * std::cos(ca), 0.033 * std::sin(ca));

    Pose w2c;
    w2c.rotation = (Eigen::AngleAxisd(tilt, tilt_axis) *
                    Eigen::AngleAxisd(spin, Vec3::UnitZ()))
                       .toRotationMatrix();
    w2c.translation = Vec3(off.x(), off.y(), depth) - w2c.rotation * centroid;
    poses.push_back(invert(w2c));
  }
  return poses;
}

std::vector<CalibrationView> render_views(const BoardSpec& board,
                                          const CameraIntrinsics& k,
                                          const std::vector<Pose>& poses,
                                          double noise_sigma = 0.0,
                                          uint64_t seed = 1) {
  const std::vector<Vec2> pts = board_points(board);
  Rng rng(seed);
  std::vector<CalibrationView> views;
  for (const Pose& pose : poses) {
    const Pose w2c = invert(pose);
    CalibrationView v;
    for (const Vec2& p : pts) {
      Vec2 uv = project_point(k, transform_point(w2c, Vec3(p.x(), p.y(), 0.0)));
      if (noise_sigma > 0.0)
        uv += Vec2(rng.normal(0.0, noise_sigma), rng.normal(0.0, noise_sigma));
      v.corners.push_back(uv);
    }
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace

TEST_CASE("board_points is row-major on the z = 0 grid") {
  const BoardSpec board;  // 6 x 7, 25 mm
  const auto pts = board_points(board);
  REQUIRE(pts.size() == 42);
  REQUIRE((pts[0] - Vec2(0, 0)).norm() < 1e-15);
  REQUIRE((pts[1] - Vec2(0.025, 0)).norm() < 1e-15);
  REQUIRE((pts[6] - Vec2(0, 0.025)).norm() < 1e-15);
  REQUIRE((pts[41] - Vec2(5 * 0.025, 6 * 0.025)).norm() < 1e-15);
}

TEST_CASE("estimate_homography recovers an exact plane map") {
  // distortion-free camera: plane-to-image is an exact homography
  CameraIntrinsics k = truth_intrinsics();
  k.k1 = k.k2 = 0.0;
  const BoardSpec board;
  const Pose pose = board_views(board, 1)[0];
  const auto views = render_views(board, k, {pose});
  const auto pts = board_points(board);

  const Mat3 h = estimate_homography(pts, views[0].corners);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 q = h * Vec3(pts[i].x(), pts[i].y(), 1.0);
    const Vec2 uv(q.x() / q.z(), q.y() / q.z());
    REQUIRE((uv - views[0].corners[i]).norm() < 1e-6);
  }

  SECTION("input validation") {
    REQUIRE_THROWS_AS(estimate_homography(pts, {Vec2(0, 0)}), Error);
    const std::vector<Vec2> three(3, Vec2(1, 2));
    REQUIRE_THROWS_AS(estimate_homography(three, three), Error);
  }
}

TEST_CASE("calibrate_planar recovers intrinsics from noise-free views") {
  const CameraIntrinsics k = truth_intrinsics();
  const BoardSpec board;
  const auto poses = board_views(board, 10);
  const auto views = render_views(board, k, poses);

  const CalibrationResult res = calibrate_planar(board, views, k.width, k.height);
  REQUIRE(std::abs(res.intrinsics.fx - k.fx) / k.fx < 1e-4);
  REQUIRE(std::abs(res.intrinsics.fy - k.fy) / k.fy < 1e-4);
  REQUIRE(std::abs(res.intrinsics.cx - k.cx) < 0.5);
  REQUIRE(std::abs(res.intrinsics.cy - k.cy) < 0.5);
  REQUIRE(std::abs(res.intrinsics.k1 - k.k1) < 1e-4);
  REQUIRE(res.rms < 1e-6);
  REQUIRE(res.intrinsics.width == 640);
  REQUIRE(res.intrinsics.height == 480);

  SECTION("recovered view poses reproject the corners") {
    REQUIRE(res.view_poses.size() == views.size());
    const auto pts = board_points(board);
    for (std::size_t v = 0; v < views.size(); ++v) {
      const Pose w2c = invert(res.view_poses[v]);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 x = transform_point(w2c, Vec3(pts[i].x(), pts[i].y(), 0.0));
        REQUIRE(x.z() > 0.0);
        REQUIRE((project_point(res.intrinsics, x) - views[v].corners[i]).norm() < 1e-4);
      }
    }
  }
}

TEST_CASE("calibrate_planar tolerates corner noise") {
  const CameraIntrinsics k = truth_intrinsics();
  const BoardSpec board;
  const auto poses = board_views(board, 10);
  for (uint64_t trial = 0; trial < 3; ++trial) {
    const auto views = render_views(board, k, poses, 0.2, 100 + trial);
    const CalibrationResult res = calibrate_planar(board, views, k.width, k.height);
    REQUIRE(std::abs(res.intrinsics.fx - k.fx) / k.fx < 0.005);
    REQUIRE(std::abs(res.intrinsics.fy - k.fy) / k.fy < 0.005);
    REQUIRE(std::abs(res.intrinsics.k1 - k.k1) <= 0.02);
    REQUIRE(res.rms < 0.5);  // consistent with the injected noise level
  }
}

TEST_CASE("calibrate_planar failure modes") {
  const CameraIntrinsics k = truth_intrinsics();
  const BoardSpec board;
  SECTION("fewer than 3 views") {
    const auto views = render_views(board, k, board_views(board, 2));
    REQUIRE_THROWS_AS(calibrate_planar(board, views), Error);
  }
  SECTION("corner count mismatch") {
    auto views = render_views(board, k, board_views(board, 4));
    views[2].corners.pop_back();
    REQUIRE_THROWS_AS(calibrate_planar(board, views), Error);
  }
  SECTION("no rotation diversity") {
    const auto one = render_views(board, k, board_views(board, 1));
    const std::vector<CalibrationView> views(5, one[0]);
    REQUIRE_THROWS_AS(calibrate_planar(board, views), Error);
  }
  SECTION("invalid board") {
    BoardSpec bad;
    bad.inner_corners_x = 1;
    REQUIRE_THROWS_AS(calibrate_planar(bad, render_views(board, k, board_views(board, 3))),
                      Error);
  }
}

TEST_CASE("calibration_input_from_json") {
  SECTION("full input") {
    const auto input = calibration_input_from_json(R"({
      "board": {"nx": 6, "ny": 7, "square_m": 0.025},
      "views": [{"corners": [[1,2],[3,4]]}, {"corners": [[5,6],[7,8]]}],
      "width": 640, "height": 480
    })");
    REQUIRE(input.board.inner_corners_x == 6);
    REQUIRE(input.board.inner_corners_y == 7);
    REQUIRE(input.board.square_size == 0.025);
    REQUIRE(input.views.size() == 2);
    REQUIRE(input.views[1].corners[1].y() == 8.0);
    REQUIRE(input.width == 640);
    REQUIRE(input.height == 480);
  }
  SECTION("width and height are optional") {
    const auto input = calibration_input_from_json(
        R"({"board": {"nx": 4, "ny": 5, "square_m": 0.05}, "views": []})");
    REQUIRE(input.width == 0);
    REQUIRE(input.height == 0);
  }
  SECTION("missing board key rejected") {
    REQUIRE_THROWS_AS(calibration_input_from_json(R"({"views": []})"), Error);
  }
}
