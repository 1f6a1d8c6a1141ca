#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgetrack/geometry.hpp"

namespace edgetrack {

/// Unique undirected model edge (v0 < v1) with its adjacent faces.
struct ModelEdge {
  int v0 = 0;
  int v1 = 0;
  std::vector<int> faces;
};

/// Polyhedral wireframe. Faces wind counter-clockwise when viewed from
/// outside, so the Newell normal points outward.
struct WireframeModel {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  std::vector<ModelEdge> edges;
  std::vector<Vec3> face_normals;   // unit outward
  std::vector<Vec3> face_centroids;
};

/// Detected or projected image line segment. Provenance links a projected
/// segment back to its model edge and (possibly clipped) 3D endpoints.
struct Segment2D {
  Vec2 p0 = Vec2::Zero();
  Vec2 p1 = Vec2::Zero();
  double orientation = 0.0;  // [0, pi)
  double length = 0.0;

  struct Provenance {
    int model_edge = -1;
    Vec3 x0 = Vec3::Zero();  // world/model frame, meters
    Vec3 x1 = Vec3::Zero();
  };
  std::optional<Provenance> provenance;
};

inline double segment_orientation(const Vec2& p0, const Vec2& p1) {
  double a = std::atan2(p1.y() - p0.y(), p1.x() - p0.x());
  if (a < 0.0) a += M_PI;
  if (a >= M_PI) a -= M_PI;
  return a;
}

inline Segment2D make_segment(const Vec2& p0, const Vec2& p1) {
  Segment2D s;
  s.p0 = p0;
  s.p1 = p1;
  s.length = (p1 - p0).norm();
  s.orientation = segment_orientation(p0, p1);
  return s;
}

namespace detail {

// Newell's method; magnitude equals twice the polygon area.
inline Vec3 newell_normal(const std::vector<Vec3>& verts,
                          const std::vector<int>& face) {
  Vec3 n = Vec3::Zero();
  for (std::size_t i = 0; i < face.size(); ++i) {
    const Vec3& a = verts[face[i]];
    const Vec3& b = verts[face[(i + 1) % face.size()]];
    n.x() += (a.y() - b.y()) * (a.z() + b.z());
    n.y() += (a.z() - b.z()) * (a.x() + b.x());
    n.z() += (a.x() - b.x()) * (a.y() + b.y());
  }
  return n;
}

}  // namespace detail

/// Validates geometry and derives the unique edge list, face normals and
/// centroids.
inline WireframeModel build_model(std::vector<Vec3> vertices,
                                  std::vector<std::vector<int>> faces) {
  WireframeModel m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);

  const int nv = static_cast<int>(m.vertices.size());
  std::map<std::pair<int, int>, int> edge_index;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const auto& face = m.faces[f];
    if (face.size() < 3)
      fail(ErrorCode::ParseError, "face " + std::to_string(f) + " has fewer than 3 vertices");
    for (int idx : face)
      if (idx < 0 || idx >= nv)
        fail(ErrorCode::IndexOutOfRange,
             "face " + std::to_string(f) + " references vertex " + std::to_string(idx));

    const Vec3 n = detail::newell_normal(m.vertices, face);
    const double area = 0.5 * n.norm();
    if (area < 1e-12)
      fail(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " has near-zero area");
    const Vec3 unit = n / n.norm();

    Vec3 centroid = Vec3::Zero();
    for (int idx : face) centroid += m.vertices[idx];
    centroid /= static_cast<double>(face.size());
    for (int idx : face)
      if (std::abs(unit.dot(m.vertices[idx] - centroid)) > 1e-6)
        fail(ErrorCode::NonPlanarFace, "face " + std::to_string(f) + " is not planar");

    m.face_normals.push_back(unit);
    m.face_centroids.push_back(centroid);

    for (std::size_t i = 0; i < face.size(); ++i) {
      int a = face[i];
      int b = face[(i + 1) % face.size()];
      if (a == b)
        fail(ErrorCode::DegenerateFace,
             "face " + std::to_string(f) + " repeats vertex " + std::to_string(a));
      if (a > b) std::swap(a, b);
      auto [it, inserted] = edge_index.try_emplace({a, b}, static_cast<int>(m.edges.size()));
      if (inserted) m.edges.push_back(ModelEdge{a, b, {}});
      auto& adj = m.edges[it->second].faces;
      if (adj.size() >= 2)
        fail(ErrorCode::NonManifoldEdge,
             "edge (" + std::to_string(a) + "," + std::to_string(b) + ") borders more than 2 faces");
      adj.push_back(static_cast<int>(f));
    }
  }
  return m;
}

/// Parses the model file format: {"unit":"m","vertices":[[x,y,z],...],
/// "faces":[[i0,i1,...],...]} with 0-based indices.
inline WireframeModel load_model(const std::string& text) {
  const nlohmann::json j = parse_json_text(text);
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  try {
    if (j.contains("unit") && j.at("unit").get<std::string>() != "m")
      fail(ErrorCode::ParseError, "model unit must be meters (\"m\")");
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 3) fail(ErrorCode::ParseError, "vertex needs 3 coordinates");
      vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const auto& f : j.at("faces")) {
      std::vector<int> face;
      for (const auto& idx : f) face.push_back(idx.get<int>());
      faces.push_back(std::move(face));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("model: ") + e.what());
  }
  return build_model(std::move(vertices), std::move(faces));
}

inline WireframeModel load_model_file(const std::string& path) {
  return load_model(read_text_file(path));
}

/// Per-face visibility by the surface-normal vs camera-ray dot product:
/// visible iff dot(outward normal, centroid - camera center) < 0, with
/// |dot| <= 1e-9 counting as hidden.
inline std::vector<bool> face_visibility(const WireframeModel& model,
                                         const Pose& camera_pose) {
  const Vec3 center = camera_pose.translation;
  std::vector<bool> visible(model.faces.size(), false);
  for (std::size_t f = 0; f < model.faces.size(); ++f) {
    const Vec3 ray = (model.face_centroids[f] - center).normalized();
    visible[f] = model.face_normals[f].dot(ray) < -1e-9;
  }
  return visible;
}

/// An edge is visible iff at least one adjacent face is visible.
inline std::vector<int> visible_edges(const WireframeModel& model,
                                      const std::vector<bool>& visibility) {
  if (visibility.size() != model.faces.size())
    fail(ErrorCode::LengthMismatch, "visibility list does not match face count");
  std::vector<int> out;
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    for (int f : model.edges[e].faces) {
      if (visibility[f]) {
        out.push_back(static_cast<int>(e));
        break;
      }
    }
  }
  return out;
}

namespace detail {

/// Near-plane used when clipping edges in the camera frame. Far below any
/// real scene depth but safely above kDepthEpsilon.
inline constexpr double kClipNear = 1e-6;
/// Emitted pixel coordinates satisfy 0 <= u <= width - kBorderMargin, so the
/// half-open invariant u < width holds.
inline constexpr double kBorderMargin = 1e-6;

struct EdgeClipper {
  Vec3 a_cam, b_cam;
  const CameraIntrinsics* k;
  double umax, vmax;

  bool inside(double s) const {
    const Vec3 x = a_cam + s * (b_cam - a_cam);
    if (x.z() <= kClipNear) return false;
    const Vec2 uv = project_point(*k, x);
    return uv.x() >= 0.0 && uv.x() <= umax && uv.y() >= 0.0 && uv.y() <= vmax;
  }

  // Bisects between an outside and an inside parameter; returns a value on
  // the inside of the boundary.
  double refine(double s_out, double s_in) const {
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (s_out + s_in);
      if (inside(mid))
        s_in = mid;
      else
        s_out = mid;
    }
    return s_in;
  }
};

}  // namespace detail

/// Projects the given model edges into the image, clipping against the
/// image rectangle [0,width) x [0,height) and the near plane. Each emitted
/// segment carries its model-edge index and clipped 3D endpoints; its pixel
/// endpoints are exact projections of those 3D endpoints. The projected
/// image curve is sampled at 64 intervals and border crossings are refined
/// by bisection, so the longest in-view run of each edge is kept.
inline std::vector<Segment2D> project_edges(const WireframeModel& model,
                                            const Pose& camera_pose,
                                            const CameraIntrinsics& k,
                                            const std::vector<int>& edge_ids) {
  const Pose w2c = invert(camera_pose);
  constexpr int kSamples = 64;
  std::vector<Segment2D> out;
  for (int e : edge_ids) {
    const ModelEdge& edge = model.edges[e];
    const Vec3 a_w = model.vertices[edge.v0];
    const Vec3 b_w = model.vertices[edge.v1];
    detail::EdgeClipper clip{transform_point(w2c, a_w), transform_point(w2c, b_w),
                             &k, k.width - detail::kBorderMargin,
                             k.height - detail::kBorderMargin};

    bool in[kSamples + 1];
    for (int i = 0; i <= kSamples; ++i)
      in[i] = clip.inside(static_cast<double>(i) / kSamples);

    // Longest contiguous in-view run.
    int best_lo = -1, best_hi = -1;
    for (int i = 0; i <= kSamples;) {
      if (!in[i]) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 <= kSamples && in[j + 1]) ++j;
      if (best_lo < 0 || j - i > best_hi - best_lo) {
        best_lo = i;
        best_hi = j;
      }
      i = j + 1;
    }
    if (best_lo < 0) continue;  // fully outside or behind the camera

    double s0 = static_cast<double>(best_lo) / kSamples;
    double s1 = static_cast<double>(best_hi) / kSamples;
    if (best_lo > 0) s0 = clip.refine(static_cast<double>(best_lo - 1) / kSamples, s0);
    if (best_hi < kSamples) s1 = clip.refine(static_cast<double>(best_hi + 1) / kSamples, s1);

    const Vec3 x0_w = a_w + s0 * (b_w - a_w);
    const Vec3 x1_w = a_w + s1 * (b_w - a_w);
    Segment2D seg = make_segment(project_point(k, clip.a_cam + s0 * (clip.b_cam - clip.a_cam)),
                                 project_point(k, clip.a_cam + s1 * (clip.b_cam - clip.a_cam)));
    seg.provenance = Segment2D::Provenance{e, x0_w, x1_w};
    out.push_back(seg);
  }
  return out;
}

/// The visible-edge profile: back-face culling, then projection. Fails with
/// EmptyProfile when nothing visible survives clipping.
inline std::vector<Segment2D> project_profile(const WireframeModel& model,
                                              const Pose& camera_pose,
                                              const CameraIntrinsics& k) {
  const std::vector<bool> vis = face_visibility(model, camera_pose);
  std::vector<Segment2D> out =
      project_edges(model, camera_pose, k, visible_edges(model, vis));
  if (out.empty())
    fail(ErrorCode::EmptyProfile, "no visible edge projects into the image");
  return out;
}

}  // namespace edgetrack
