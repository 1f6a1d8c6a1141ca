#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edgetrack/simulate.hpp"
#include "edgetrack/tracker.hpp"

namespace edgetrack {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Flat key/value configuration with dotted keys for nesting. Ordered map so
/// manifests serialize deterministically.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment, blank lines ignored.
inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError,
           "config line " + std::to_string(line_no) + " has no '='");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      fail(ErrorCode::ParseError,
           "config line " + std::to_string(line_no) + " has an empty key");
    map[key] = value;
  }
  return map;
}

/// Overlays `overlay` onto `base`; keys unknown to `base` are rejected so
/// typos surface instead of silently using defaults.
inline void merge_config(ConfigMap& base, const ConfigMap& overlay) {
  for (const auto& [key, value] : overlay) {
    if (base.find(key) == base.end())
      fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
    base[key] = value;
  }
}

inline void apply_override(ConfigMap& base, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    fail(ErrorCode::ParseError, "override '" + key_eq_value + "' is not key=value");
  ConfigMap one;
  one[detail::trim(key_eq_value.substr(0, eq))] = detail::trim(key_eq_value.substr(eq + 1));
  merge_config(base, one);
}

namespace detail {

inline double config_double(const ConfigMap& map, const std::string& key) {
  const std::string& s = map.at(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "config key '" + key + "': bad number '" + s + "'");
  }
  if (pos != s.size())
    fail(ErrorCode::ParseError, "config key '" + key + "': bad number '" + s + "'");
  return v;
}

inline int config_int(const ConfigMap& map, const std::string& key) {
  const double v = config_double(map, key);
  if (v != static_cast<double>(static_cast<long long>(v)))
    fail(ErrorCode::ParseError, "config key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

inline uint64_t config_u64(const ConfigMap& map, const std::string& key) {
  const std::string& s = map.at(key);
  std::size_t pos = 0;
  uint64_t v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "config key '" + key + "': bad seed '" + s + "'");
  }
  if (pos != s.size())
    fail(ErrorCode::ParseError, "config key '" + key + "': bad seed '" + s + "'");
  return v;
}

inline Vec3 config_vec3(const ConfigMap& map, const std::string& key) {
  std::istringstream in(map.at(key));
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z()) || !(in >> std::ws).eof())
    fail(ErrorCode::ParseError, "config key '" + key + "' needs 3 numbers");
  return v;
}

inline std::string vec3_value(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

inline Pose config_pose(const ConfigMap& map, const std::string& key) {
  std::istringstream in(map.at(key));
  double t[3], q[4];
  if (!(in >> t[0] >> t[1] >> t[2] >> q[0] >> q[1] >> q[2] >> q[3]) || !(in >> std::ws).eof())
    fail(ErrorCode::ParseError, "config key '" + key + "' needs tx ty tz qw qx qy qz");
  Pose p;
  p.translation = Vec3(t[0], t[1], t[2]);
  p.rotation = quaternion_to_rotation(Vec4(q[0], q[1], q[2], q[3]));
  return p;
}

inline std::string pose_value(const Pose& p) {
  const Vec4 q = rotation_to_quaternion(p.rotation);
  std::string s = vec3_value(p.translation);
  for (int i = 0; i < 4; ++i) s += " " + format_double(q(i));
  return s;
}

}  // namespace detail

/// All tracking keys with their built-in defaults.
inline ConfigMap track_config_defaults() {
  const TrackerConfig d;
  ConfigMap map;
  map["lsd.scale"] = detail::format_double(d.lsd.scale);
  map["lsd.angle_tolerance"] = detail::format_double(d.lsd.angle_tolerance);
  map["lsd.gradient_threshold"] = detail::format_double(d.lsd.gradient_threshold);
  map["lsd.nfa_epsilon"] = detail::format_double(d.lsd.nfa_epsilon);
  map["lsd.min_length"] = detail::format_double(d.lsd.min_length);
  map["spacing"] = detail::format_double(d.spacing);
  map["search_radius"] = detail::format_double(d.search_radius);
  map["orient_tol"] = detail::format_double(d.orient_tol);
  map["k_max"] = std::to_string(d.k_max);
  map["fuse_gap"] = detail::format_double(d.fuse_gap);
  map["ambiguity_gap"] = detail::format_double(d.ambiguity_gap);
  map["ransac.max_iterations"] = std::to_string(d.ransac.max_iterations);
  map["ransac.sample_size"] = std::to_string(d.ransac.sample_size);
  map["ransac.inlier_threshold"] = detail::format_double(d.ransac.inlier_threshold);
  map["ransac.min_inlier_fraction"] = detail::format_double(d.ransac.min_inlier_fraction);
  map["ransac.rng_seed"] = std::to_string(d.ransac.rng_seed);
  map["cam_to_body"] = detail::pose_value(d.cam_to_body);
  map["min_tracked_fraction"] = detail::format_double(0.9);
  return map;
}

inline TrackerConfig tracker_config_from(const ConfigMap& map) {
  TrackerConfig cfg;
  cfg.lsd.scale = detail::config_double(map, "lsd.scale");
  cfg.lsd.angle_tolerance = detail::config_double(map, "lsd.angle_tolerance");
  cfg.lsd.gradient_threshold = detail::config_double(map, "lsd.gradient_threshold");
  cfg.lsd.nfa_epsilon = detail::config_double(map, "lsd.nfa_epsilon");
  cfg.lsd.min_length = detail::config_double(map, "lsd.min_length");
  cfg.spacing = detail::config_double(map, "spacing");
  cfg.search_radius = detail::config_double(map, "search_radius");
  cfg.orient_tol = detail::config_double(map, "orient_tol");
  cfg.k_max = detail::config_int(map, "k_max");
  cfg.fuse_gap = detail::config_double(map, "fuse_gap");
  cfg.ambiguity_gap = detail::config_double(map, "ambiguity_gap");
  cfg.ransac.max_iterations = detail::config_int(map, "ransac.max_iterations");
  cfg.ransac.sample_size = detail::config_int(map, "ransac.sample_size");
  cfg.ransac.inlier_threshold = detail::config_double(map, "ransac.inlier_threshold");
  cfg.ransac.min_inlier_fraction = detail::config_double(map, "ransac.min_inlier_fraction");
  cfg.ransac.rng_seed = detail::config_u64(map, "ransac.rng_seed");
  cfg.cam_to_body = detail::config_pose(map, "cam_to_body");
  return cfg;
}

/// All simulation keys with their built-in defaults.
inline ConfigMap simulate_config_defaults() {
  const OrbitSpec o;
  const RenderSpec r;
  ConfigMap map;
  map["orbit.radius"] = detail::format_double(o.radius);
  map["orbit.height"] = detail::format_double(o.height);
  map["orbit.center"] = detail::vec3_value(o.center);
  map["orbit.revolutions"] = detail::format_double(o.revolutions);
  map["orbit.n_frames"] = std::to_string(o.n_frames);
  map["orbit.look_at"] = detail::vec3_value(o.look_at);
  map["render.edge_contrast"] = detail::format_double(r.edge_contrast);
  map["render.blur_sigma"] = detail::format_double(r.blur_sigma);
  map["render.noise_sigma"] = detail::format_double(r.noise_sigma);
  map["render.n_clutter"] = std::to_string(r.n_clutter);
  map["render.dropout_fraction"] = detail::format_double(r.dropout_fraction);
  map["render.rng_seed"] = std::to_string(r.rng_seed);
  map["image.format"] = "pgm";
  return map;
}

inline OrbitSpec orbit_from(const ConfigMap& map) {
  OrbitSpec o;
  o.radius = detail::config_double(map, "orbit.radius");
  o.height = detail::config_double(map, "orbit.height");
  o.center = detail::config_vec3(map, "orbit.center");
  o.revolutions = detail::config_double(map, "orbit.revolutions");
  o.n_frames = detail::config_int(map, "orbit.n_frames");
  o.look_at = detail::config_vec3(map, "orbit.look_at");
  return o;
}

inline RenderSpec render_from(const ConfigMap& map) {
  RenderSpec r;
  r.edge_contrast = detail::config_double(map, "render.edge_contrast");
  r.blur_sigma = detail::config_double(map, "render.blur_sigma");
  r.noise_sigma = detail::config_double(map, "render.noise_sigma");
  r.n_clutter = detail::config_int(map, "render.n_clutter");
  r.dropout_fraction = detail::config_double(map, "render.dropout_fraction");
  r.rng_seed = detail::config_u64(map, "render.rng_seed");
  return r;
}

/// Record of one CLI run: fully resolved config plus input/output paths.
/// Re-running from a manifest reproduces the outputs bit-exactly.
struct RunManifest {
  std::string command;
  ConfigMap config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
};

inline std::string manifest_to_json_text(const RunManifest& m) {
  nlohmann::json j;
  j["artifact_version"] = kArtifactVersion;
  j["command"] = m.command;
  j["config"] = nlohmann::json::object();
  for (const auto& [key, value] : m.config) j["config"][key] = value;
  j["inputs"] = nlohmann::json::object();
  for (const auto& [key, value] : m.inputs) j["inputs"][key] = value;
  j["outputs"] = nlohmann::json::object();
  for (const auto& [key, value] : m.outputs) j["outputs"][key] = value;
  return j.dump(2) + "\n";
}

inline RunManifest manifest_from_json_text(const std::string& text) {
  const nlohmann::json j = parse_json_text(text);
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    for (const auto& [key, value] : j.at("config").items())
      m.config[key] = value.get<std::string>();
    for (const auto& [key, value] : j.at("inputs").items())
      m.inputs[key] = value.get<std::string>();
    for (const auto& [key, value] : j.at("outputs").items())
      m.outputs[key] = value.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  return m;
}

}  // namespace edgetrack
