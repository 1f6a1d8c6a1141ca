#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "edgetrack/simulate.hpp"
#include "edgetrack/wiremodel.hpp"

using namespace edgetrack;

namespace {

WireframeModel unit_cube() {
  const std::vector<Vec3> v = {
      {-0.5, -0.5, -0.5}, {0.5, -0.5, -0.5}, {0.5, 0.5, -0.5}, {-0.5, 0.5, -0.5},
      {-0.5, -0.5, 0.5},  {0.5, -0.5, 0.5},  {0.5, 0.5, 0.5},  {-0.5, 0.5, 0.5}};
  const std::vector<std::vector<int>> f = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                           {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
  return build_model(v, f);
}

CameraIntrinsics default_camera() {
  CameraIntrinsics k;
  k.fx = k.fy = 500.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

/// Head-on view: world axes equal camera axes, so the optical axis (+z) runs
/// from (0,0,-5) through the origin.
Pose head_on() {
  Pose p;
  p.translation = Vec3(0, 0, -5);
  return p;
}

}  // namespace

TEST_CASE("build_model derives a validated edge list") {
  SECTION("unit cube: 24 half-edges deduplicate to 12, all two-sided") {
    const WireframeModel m = unit_cube();
    REQUIRE(m.edges.size() == 12);
    for (const ModelEdge& e : m.edges) {
      REQUIRE(e.v0 < e.v1);
      REQUIRE(e.faces.size() == 2);
    }
    for (std::size_t f = 0; f < m.faces.size(); ++f)
      REQUIRE(std::abs(m.face_normals[f].norm() - 1.0) < 1e-12);
  }
  SECTION("outward normals on the cube") {
    const WireframeModel m = unit_cube();
    // face 0 is the z = -0.5 face; its outward normal points along -z
    REQUIRE((m.face_normals[0] - Vec3(0, 0, -1)).norm() < 1e-12);
    REQUIRE((m.face_normals[1] - Vec3(0, 0, 1)).norm() < 1e-12);
  }
  SECTION("single square face: 4 one-sided edges") {
    const WireframeModel m =
        build_model({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2, 3}});
    REQUIRE(m.edges.size() == 4);
    for (const ModelEdge& e : m.edges) REQUIRE(e.faces.size() == 1);
  }
  SECTION("vertex index out of range") {
    REQUIRE_THROWS_AS(build_model({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}}, {{0, 1, 99}}),
                      Error);
  }
  SECTION("non-planar face") {
    REQUIRE_THROWS_AS(
        build_model({{0, 0, 0}, {1, 0, 0}, {1, 1, 0.5}, {0, 1, 0}}, {{0, 1, 2, 3}}),
        Error);
  }
  SECTION("degenerate face") {
    REQUIRE_THROWS_AS(
        build_model({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), Error);
  }
}

TEST_CASE("load_model") {
  SECTION("unit cube JSON") {
    const WireframeModel m = load_model(R"({
      "unit": "m",
      "vertices": [[-0.5,-0.5,-0.5],[0.5,-0.5,-0.5],[0.5,0.5,-0.5],[-0.5,0.5,-0.5],
                   [-0.5,-0.5,0.5],[0.5,-0.5,0.5],[0.5,0.5,0.5],[-0.5,0.5,0.5]],
      "faces": [[0,3,2,1],[4,5,6,7],[0,1,5,4],[1,2,6,5],[2,3,7,6],[3,0,4,7]]
    })");
    REQUIRE(m.vertices.size() == 8);
    REQUIRE(m.edges.size() == 12);
  }
  SECTION("malformed JSON rejected") {
    REQUIRE_THROWS_AS(load_model("{not json"), Error);
  }
}

TEST_CASE("face_visibility implements the dot-product rule") {
  const WireframeModel m = unit_cube();
  SECTION("head-on: exactly the near face") {
    const std::vector<bool> vis = face_visibility(m, head_on());
    int count = 0;
    for (bool v : vis) count += v;
    REQUIRE(count == 1);
    REQUIRE(vis[0]);  // the z = -0.5 face
  }
  SECTION("corner view: exactly 3 faces") {
    const Pose p = look_at_pose(Vec3(5, 5, 5), Vec3::Zero());
    const std::vector<bool> vis = face_visibility(m, p);
    int count = 0;
    for (bool v : vis) count += v;
    REQUIRE(count == 3);
  }
  SECTION("edge-on face counts as hidden") {
    // Camera in the z = 0 plane of a square face whose normal is +z: the
    // centroid ray is perpendicular to the normal, dot = 0, hidden by the
    // declared tie-break.
    const WireframeModel square =
        build_model({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2, 3}});
    Pose cam;
    cam.translation = Vec3(0.5, -3.0, 0.0);
    const std::vector<bool> vis = face_visibility(square, cam);
    REQUIRE_FALSE(vis[0]);
  }
}

TEST_CASE("visible_edges unions the visible faces' edges") {
  const WireframeModel m = unit_cube();
  SECTION("head-on: 4 edges") {
    REQUIRE(visible_edges(m, face_visibility(m, head_on())).size() == 4);
  }
  SECTION("corner view: 9 edges") {
    const Pose p = look_at_pose(Vec3(5, 5, 5), Vec3::Zero());
    REQUIRE(visible_edges(m, face_visibility(m, p)).size() == 9);
  }
  SECTION("square from behind: none") {
    const WireframeModel square =
        build_model({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2, 3}});
    Pose cam;
    cam.translation = Vec3(0.5, 0.5, -3.0);  // normal is +z, camera below
    REQUIRE(visible_edges(square, face_visibility(square, cam)).empty());
  }
}

TEST_CASE("project_profile") {
  const WireframeModel m = unit_cube();
  const CameraIntrinsics k = default_camera();
  SECTION("head-on cube corners at hand-computed pixels") {
    // front-face corners at depth 4.5: 320 +- 500*0.5/4.5 = 320 +- 55.56
    const std::vector<Segment2D> profile = project_profile(m, head_on(), k);
    REQUIRE(profile.size() == 4);
    const double off = 500.0 * 0.5 / 4.5;
    for (const Segment2D& s : profile) {
      for (const Vec2& p : {s.p0, s.p1}) {
        REQUIRE(std::min(std::abs(p.x() - (320 - off)), std::abs(p.x() - (320 + off))) <
                0.1);
        REQUIRE(std::min(std::abs(p.y() - (240 - off)), std::abs(p.y() - (240 + off))) <
                0.1);
      }
    }
  }
  SECTION("provenance re-projects to the 2D endpoints") {
    const Pose cam = look_at_pose(Vec3(2.5, 1.5, 1.0), Vec3::Zero());
    const Pose w2c = invert(cam);
    for (const Segment2D& s : project_profile(m, cam, k)) {
      REQUIRE(s.provenance.has_value());
      REQUIRE(s.provenance->model_edge >= 0);
      const Vec2 q0 = project_point(k, transform_point(w2c, s.provenance->x0));
      const Vec2 q1 = project_point(k, transform_point(w2c, s.provenance->x1));
      REQUIRE((q0 - s.p0).norm() < 1e-6);
      REQUIRE((q1 - s.p1).norm() < 1e-6);
    }
  }
  SECTION("all endpoints inside the image rectangle") {
    // close-in view so several edges cross the borders
    const Pose cam = look_at_pose(Vec3(1.2, 0.9, 0.4), Vec3::Zero());
    bool any_on_border = false;
    for (const Segment2D& s : project_profile(m, cam, k)) {
      for (const Vec2& p : {s.p0, s.p1}) {
        REQUIRE(p.x() >= 0.0);
        REQUIRE(p.x() < k.width);
        REQUIRE(p.y() >= 0.0);
        REQUIRE(p.y() < k.height);
        const double border = std::min(
            std::min(p.x(), k.width - p.x()), std::min(p.y(), k.height - p.y()));
        if (border < 1e-3) any_on_border = true;
      }
    }
    REQUIRE(any_on_border);
  }
  SECTION("camera looking away: EmptyProfile") {
    Pose cam;
    cam.translation = Vec3(0, 0, -5);
    cam.rotation << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // optical axis -z, cube behind
    REQUIRE_THROWS_AS(project_profile(m, cam, k), Error);
  }
  SECTION("segment invariants hold") {
    const Pose cam = look_at_pose(Vec3(2.5, 1.5, 1.0), Vec3::Zero());
    for (const Segment2D& s : project_profile(m, cam, k)) {
      REQUIRE(std::abs(s.length - (s.p1 - s.p0).norm()) < 1e-9);
      REQUIRE(s.orientation >= 0.0);
      REQUIRE(s.orientation < M_PI);
      const double expect = segment_orientation(s.p0, s.p1);
      REQUIRE(std::abs(s.orientation - expect) < 1e-12);
    }
  }
}
