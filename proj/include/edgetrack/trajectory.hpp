#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "edgetrack/geometry.hpp"

namespace edgetrack {

/// One per-frame trajectory record. Truth trajectories carry only frame and
/// pose; estimate trajectories add status and diagnostics.
struct TrajectoryRow {
  int frame = 0;
  bool tracking = true;
  Pose pose = Pose::identity();
  double inlier_fraction = 0.0;
  double rms_px = 0.0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double_field(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad numeric field '" + s + "'");
  }
  if (pos != s.size()) fail(ErrorCode::ParseError, "bad numeric field '" + s + "'");
  return v;
}

inline std::string pose_csv_fields(const Pose& p) {
  const Vec4 q = rotation_to_quaternion(p.rotation);
  std::string s;
  s += format_double(p.translation.x()) + "," + format_double(p.translation.y()) +
       "," + format_double(p.translation.z());
  for (int i = 0; i < 4; ++i) s += "," + format_double(q(i));
  return s;
}

inline Pose pose_from_fields(const std::vector<std::string>& f, std::size_t at) {
  Pose p;
  p.translation = Vec3(parse_double_field(f[at]), parse_double_field(f[at + 1]),
                       parse_double_field(f[at + 2]));
  const Vec4 q(parse_double_field(f[at + 3]), parse_double_field(f[at + 4]),
               parse_double_field(f[at + 5]), parse_double_field(f[at + 6]));
  p.rotation = quaternion_to_rotation(q);
  return p;
}

}  // namespace detail

inline constexpr const char* kTrajectoryHeader =
    "frame,status,tx,ty,tz,qw,qx,qy,qz,inlier_fraction,rms_px";
inline constexpr const char* kTruthHeader = "frame,tx,ty,tz,qw,qx,qy,qz";

inline std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (const TrajectoryRow& r : rows) {
    out += std::to_string(r.frame);
    out += r.tracking ? ",Tracking," : ",Lost,";
    out += detail::pose_csv_fields(r.pose);
    out += "," + detail::format_double(r.inlier_fraction);
    out += "," + detail::format_double(r.rms_px);
    out += "\n";
  }
  return out;
}

inline std::string truth_to_csv(const std::vector<Pose>& poses) {
  std::string out = std::string(kTruthHeader) + "\n";
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out += std::to_string(i) + "," + detail::pose_csv_fields(poses[i]) + "\n";
  }
  return out;
}

inline std::vector<TrajectoryRow> trajectory_from_csv(const std::string& text) {
  std::vector<TrajectoryRow> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (!f.empty() && f[0] == "frame") continue;  // header
    if (f.size() != 11)
      fail(ErrorCode::ParseError, "trajectory row needs 11 fields, got " +
                                      std::to_string(f.size()));
    TrajectoryRow r;
    r.frame = static_cast<int>(detail::parse_double_field(f[0]));
    if (f[1] == "Tracking")
      r.tracking = true;
    else if (f[1] == "Lost")
      r.tracking = false;
    else
      fail(ErrorCode::ParseError, "unknown status '" + f[1] + "'");
    r.pose = detail::pose_from_fields(f, 2);
    r.inlier_fraction = detail::parse_double_field(f[9]);
    r.rms_px = detail::parse_double_field(f[10]);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<Pose> truth_from_csv(const std::string& text) {
  std::vector<Pose> poses;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (!f.empty() && f[0] == "frame") continue;  // header
    if (f.size() != 8)
      fail(ErrorCode::ParseError,
           "truth row needs 8 fields, got " + std::to_string(f.size()));
    poses.push_back(detail::pose_from_fields(f, 1));
  }
  return poses;
}

}  // namespace edgetrack
