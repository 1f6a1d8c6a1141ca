// Command-line front end: track, simulate, eval, overlay, calibrate, rerun.
// Every writing command drops a manifest with the fully resolved config next
// to its outputs; `rerun` replays a manifest and reproduces them bit-exactly.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "edgetrack/calibrate.hpp"
#include "edgetrack/config.hpp"
#include "edgetrack/simulate.hpp"
#include "edgetrack/tracker.hpp"
#include "edgetrack/trajectory.hpp"

namespace et = edgetrack;
namespace fs = std::filesystem;

namespace {

std::string frame_name(int index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.%s", index, ext.c_str());
  return buf;
}

/// Precedence: built-in defaults < config file < --set overrides.
et::ConfigMap resolve_config(et::ConfigMap defaults, const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  if (!config_path.empty())
    et::merge_config(defaults, et::parse_config_text(et::read_text_file(config_path)));
  for (const std::string& kv : overrides) et::apply_override(defaults, kv);
  return defaults;
}

/// Initialization file: either a pose {"t":[x,y,z],"q":[w,x,y,z]} (known
/// starting position) or a correspondence list [{"uv":[u,v],"xyz":[x,y,z]},…]
/// solved by the multi-start initializer.
et::Pose initial_pose(const std::string& text, const et::CameraIntrinsics& k) {
  const nlohmann::json j = et::parse_json_text(text);
  if (j.is_object() && j.contains("t") && j.contains("q")) {
    try {
      et::Pose p;
      p.translation = et::Vec3(j.at("t")[0].get<double>(), j.at("t")[1].get<double>(),
                               j.at("t")[2].get<double>());
      p.rotation = et::quaternion_to_rotation(
          et::Vec4(j.at("q")[0].get<double>(), j.at("q")[1].get<double>(),
                   j.at("q")[2].get<double>(), j.at("q")[3].get<double>()));
      return p;
    } catch (const nlohmann::json::exception& e) {
      et::fail(et::ErrorCode::ParseError, std::string("init pose: ") + e.what());
    }
  }
  return et::init_pose_from_points(et::correspondences_from_json(text), k);
}

int run_track(const std::map<std::string, std::string>& inputs,
              const et::ConfigMap& config, const std::string& out_path) {
  const et::WireframeModel model = et::load_model_file(inputs.at("model"));
  const et::CameraIntrinsics k = et::intrinsics_from_json(
      et::parse_json_text(et::read_text_file(inputs.at("intrinsics"))));
  const std::vector<std::string> frames = et::list_frames(inputs.at("frames"));
  if (frames.empty())
    et::fail(et::ErrorCode::IoError, "no frame_* images in " + inputs.at("frames"));

  const et::TrackerConfig cfg = et::tracker_config_from(config);
  const double min_tracked =
      et::detail::config_double(config, "min_tracked_fraction");

  et::TrackerState state;
  state.camera_pose = initial_pose(et::read_text_file(inputs.at("init")), k);

  std::vector<et::TrajectoryRow> rows;
  int n_tracked = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    state = et::track_frame(state, et::load_image(frames[i]), model, k, cfg);
    et::TrajectoryRow row;
    row.frame = static_cast<int>(i);
    row.tracking = state.status == et::TrackStatus::Tracking;
    row.pose = et::body_pose(state.camera_pose, cfg.cam_to_body);
    row.inlier_fraction = state.last_inlier_fraction;
    row.rms_px = state.last_rms;
    rows.push_back(row);
    if (row.tracking) ++n_tracked;
  }
  et::write_text_file(out_path, et::trajectory_to_csv(rows));

  et::RunManifest m;
  m.command = "track";
  m.config = config;
  m.inputs = inputs;
  m.outputs["trajectory"] = out_path;
  et::write_text_file(out_path + ".manifest.json", et::manifest_to_json_text(m));

  const double fraction = static_cast<double>(n_tracked) / rows.size();
  return fraction >= min_tracked ? 0 : 2;
}

int run_simulate(const std::map<std::string, std::string>& inputs,
                 const et::ConfigMap& config, const std::string& out_dir) {
  const et::WireframeModel model = et::load_model_file(inputs.at("model"));
  const et::CameraIntrinsics k = et::intrinsics_from_json(
      et::parse_json_text(et::read_text_file(inputs.at("intrinsics"))));
  const et::OrbitSpec orbit = et::orbit_from(config);
  const et::RenderSpec render = et::render_from(config);
  const std::string format = config.at("image.format");
  if (format != "pgm" && format != "png")
    et::fail(et::ErrorCode::ParseError, "image.format must be pgm or png");

  fs::create_directories(out_dir);
  const std::vector<et::Pose> truth = et::make_orbit(orbit);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    // Per-frame RNG stream: seed XOR frame index, so any frame regenerates
    // alone and frames could render in parallel without coordination.
    et::RenderSpec spec = render;
    spec.rng_seed = render.rng_seed ^ static_cast<uint64_t>(i);
    const auto [img, profile] = et::render_frame(model, truth[i], k, spec);
    et::save_image(out_dir + "/" + frame_name(static_cast<int>(i), format), img);
  }
  et::write_text_file(out_dir + "/truth.csv", et::truth_to_csv(truth));

  nlohmann::json scene;
  scene["intrinsics"] = et::intrinsics_to_json(k);
  scene["config"] = nlohmann::json::object();
  for (const auto& [key, value] : config) scene["config"][key] = value;
  scene["n_frames"] = orbit.n_frames;
  et::write_text_file(out_dir + "/scene.json", scene.dump(2) + "\n");

  et::RunManifest m;
  m.command = "simulate";
  m.config = config;
  m.inputs = inputs;
  m.outputs["dir"] = out_dir;
  et::write_text_file(out_dir + "/manifest.json", et::manifest_to_json_text(m));
  return 0;
}

int run_eval(const std::map<std::string, std::string>& inputs,
             const et::ConfigMap& config, const std::string& out_path) {
  std::vector<et::TrajectoryRow> rows =
      et::trajectory_from_csv(et::read_text_file(inputs.at("estimate")));
  const std::vector<et::Pose> truth =
      et::truth_from_csv(et::read_text_file(inputs.at("truth")));
  if (rows.empty())
    et::fail(et::ErrorCode::ParseError, "estimate trajectory is empty");

  const std::string units = config.at("units");
  if (units != "m" && units != "cm")
    et::fail(et::ErrorCode::ParseError, "units must be m or cm");
  const bool relative = config.at("relative") == "true";
  const double scale = units == "cm" ? 100.0 : 1.0;

  std::vector<et::Pose> truth_poses = truth;
  if (relative) {
    std::vector<et::Pose> est;
    est.reserve(rows.size());
    for (const et::TrajectoryRow& r : rows) est.push_back(r.pose);
    est = et::relative_to_first(est);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].pose = est[i];
    truth_poses = et::relative_to_first(truth);
  }
  const et::TrajectoryMetrics m = et::evaluate_trajectory(rows, truth_poses);

  nlohmann::json j;
  j["units"] = units;
  j["relative"] = relative;
  j["n_frames"] = m.n_frames;
  j["n_tracked"] = m.n_tracked;
  j["tracked_fraction"] = m.tracked_fraction;
  j["translation_rmse"] = m.translation_rmse * scale;
  j["translation_max"] = m.translation_max * scale;
  j["rotation_rmse_deg"] = m.rotation_rmse_deg;
  j["rotation_max_deg"] = m.rotation_max_deg;
  if (relative) {
    nlohmann::json arr = nlohmann::json::array();
    for (const et::TrajectoryRow& r : rows) {
      const et::Vec3 ypr = et::rotation_to_ypr_deg(r.pose.rotation);
      nlohmann::json row;
      row["frame"] = r.frame;
      row["status"] = r.tracking ? "Tracking" : "Lost";
      row["t"] = {r.pose.translation.x() * scale, r.pose.translation.y() * scale,
                  r.pose.translation.z() * scale};
      row["ypr_deg"] = {ypr.x(), ypr.y(), ypr.z()};
      arr.push_back(row);
    }
    j["relative_trajectory"] = arr;
  }
  const std::string text = j.dump(2) + "\n";
  std::cout << text;

  if (!out_path.empty()) {
    et::write_text_file(out_path, text);
    et::RunManifest man;
    man.command = "eval";
    man.config = config;
    man.inputs = inputs;
    man.outputs["metrics"] = out_path;
    et::write_text_file(out_path + ".manifest.json", et::manifest_to_json_text(man));
  }
  return 0;
}

void draw_segment(et::GrayImage& img, const et::Segment2D& s, bool dashed) {
  if (s.length < 1e-9) return;
  const et::Vec2 d = (s.p1 - s.p0) / s.length;
  for (double t = 0.0; t <= s.length; t += 0.5) {
    if (dashed && std::fmod(t, 12.0) >= 6.0) continue;
    const et::Vec2 p = s.p0 + t * d;
    const int x = static_cast<int>(std::floor(p.x()));
    const int y = static_cast<int>(std::floor(p.y()));
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
    img.pixels[static_cast<std::size_t>(y) * img.width + x] = 255;
  }
}

int run_overlay(const std::map<std::string, std::string>& inputs,
                const std::string& out_dir) {
  const et::WireframeModel model = et::load_model_file(inputs.at("model"));
  const et::CameraIntrinsics k = et::intrinsics_from_json(
      et::parse_json_text(et::read_text_file(inputs.at("intrinsics"))));
  const std::vector<et::TrajectoryRow> rows =
      et::trajectory_from_csv(et::read_text_file(inputs.at("trajectory")));
  const std::vector<std::string> frames = et::list_frames(inputs.at("frames"));
  if (rows.empty())
    et::fail(et::ErrorCode::ParseError, "trajectory is empty");
  if (rows.size() != frames.size())
    et::fail(et::ErrorCode::LengthMismatch,
             "trajectory rows and frame files differ in count");

  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    et::GrayImage img = et::load_image(frames[i]);
    // CSV poses are camera poses (identity camera-to-body rig assumed here).
    try {
      const std::vector<et::Segment2D> profile =
          et::project_profile(model, rows[i].pose, k);
      for (const et::Segment2D& seg : profile)
        draw_segment(img, seg, !rows[i].tracking);
    } catch (const et::Error&) {
      // model out of view at this pose; emit the frame untouched
    }
    et::save_image(out_dir + "/" + fs::path(frames[i]).filename().string(), img);
  }

  et::RunManifest m;
  m.command = "overlay";
  m.inputs = inputs;
  m.outputs["dir"] = out_dir;
  et::write_text_file(out_dir + "/manifest.json", et::manifest_to_json_text(m));
  return 0;
}

int run_calibrate(const std::map<std::string, std::string>& inputs,
                  const std::string& out_path) {
  const et::CalibrationInput input =
      et::calibration_input_from_json(et::read_text_file(inputs.at("input")));
  const et::CalibrationResult r =
      et::calibrate_planar(input.board, input.views, input.width, input.height);
  et::write_text_file(out_path, et::intrinsics_to_json(r.intrinsics).dump(2) + "\n");

  std::string report;
  report += "views: " + std::to_string(input.views.size()) + "\n";
  report += "corners_per_view: " +
            std::to_string(input.board.inner_corners_x * input.board.inner_corners_y) +
            "\n";
  report += "rms_px: " + et::detail::format_double(r.rms) + "\n";
  report += "iterations: " + std::to_string(r.iterations) + "\n";
  et::write_text_file(out_path + ".report.txt", report);

  et::RunManifest m;
  m.command = "calibrate";
  m.inputs = inputs;
  m.outputs["intrinsics"] = out_path;
  m.outputs["report"] = out_path + ".report.txt";
  et::write_text_file(out_path + ".manifest.json", et::manifest_to_json_text(m));
  return 0;
}

int run_rerun(const std::string& manifest_path, const std::string& out_override) {
  const et::RunManifest m =
      et::manifest_from_json_text(et::read_text_file(manifest_path));
  if (m.command == "track") {
    const std::string out =
        out_override.empty() ? m.outputs.at("trajectory") : out_override;
    return run_track(m.inputs, m.config, out);
  }
  if (m.command == "simulate") {
    const std::string out = out_override.empty() ? m.outputs.at("dir") : out_override;
    return run_simulate(m.inputs, m.config, out);
  }
  if (m.command == "eval") {
    const std::string out =
        out_override.empty() ? m.outputs.at("metrics") : out_override;
    return run_eval(m.inputs, m.config, out);
  }
  if (m.command == "overlay") {
    const std::string out = out_override.empty() ? m.outputs.at("dir") : out_override;
    return run_overlay(m.inputs, out);
  }
  if (m.command == "calibrate") {
    const std::string out =
        out_override.empty() ? m.outputs.at("intrinsics") : out_override;
    return run_calibrate(m.inputs, out);
  }
  et::fail(et::ErrorCode::ParseError, "manifest command '" + m.command + "' unknown");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-based pose tracking against a wireframe model"};
  app.require_subcommand(1);

  std::string model, intrinsics, frames, init, trajectory, estimate, truth;
  std::string input, manifest, out, config_path, units = "m";
  std::vector<std::string> sets;
  bool relative = false;

  CLI::App* track = app.add_subcommand("track", "track a frame sequence");
  track->add_option("--model", model, "wireframe model JSON")->required();
  track->add_option("--intrinsics", intrinsics, "camera intrinsics JSON")->required();
  track->add_option("--frames", frames, "directory of frame_* images")->required();
  track->add_option("--init", init, "2D-3D correspondence JSON for frame 0")->required();
  track->add_option("--out", out, "trajectory CSV path")->required();
  track->add_option("--config", config_path, "key = value config file");
  track->add_option("--set", sets, "config override key=value (repeatable)");

  CLI::App* simulate = app.add_subcommand("simulate", "render an orbit sequence");
  simulate->add_option("--model", model, "wireframe model JSON")->required();
  simulate->add_option("--intrinsics", intrinsics, "camera intrinsics JSON")->required();
  simulate->add_option("--out", out, "output directory")->required();
  simulate->add_option("--config", config_path, "key = value config file");
  simulate->add_option("--set", sets, "config override key=value (repeatable)");

  CLI::App* eval = app.add_subcommand("eval", "compare a trajectory to ground truth");
  eval->add_option("--estimate", estimate, "estimated trajectory CSV")->required();
  eval->add_option("--truth", truth, "ground-truth CSV")->required();
  eval->add_option("--units", units, "m or cm")->capture_default_str();
  eval->add_flag("--relative", relative, "poses relative to the first frame");
  eval->add_option("--out", out, "also write the metrics JSON here");

  CLI::App* overlay = app.add_subcommand("overlay", "draw the model over frames");
  overlay->add_option("--model", model, "wireframe model JSON")->required();
  overlay->add_option("--intrinsics", intrinsics, "camera intrinsics JSON")->required();
  overlay->add_option("--frames", frames, "directory of frame_* images")->required();
  overlay->add_option("--trajectory", trajectory, "trajectory CSV")->required();
  overlay->add_option("--out", out, "output directory")->required();

  CLI::App* calibrate = app.add_subcommand("calibrate", "planar-board calibration");
  calibrate->add_option("--input", input, "board + corner views JSON")->required();
  calibrate->add_option("--out", out, "intrinsics JSON path")->required();

  CLI::App* rerun = app.add_subcommand("rerun", "replay a recorded run");
  rerun->add_option("--manifest", manifest, "manifest JSON of a previous run")->required();
  rerun->add_option("--out", out, "redirect the primary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // normalize parse failures to the input-error code
  }

  try {
    std::map<std::string, std::string> inputs;
    if (app.got_subcommand(track)) {
      inputs = {{"model", model}, {"intrinsics", intrinsics},
                {"frames", frames}, {"init", init}};
      return run_track(inputs, resolve_config(et::track_config_defaults(),
                                              config_path, sets), out);
    }
    if (app.got_subcommand(simulate)) {
      inputs = {{"model", model}, {"intrinsics", intrinsics}};
      return run_simulate(inputs, resolve_config(et::simulate_config_defaults(),
                                                 config_path, sets), out);
    }
    if (app.got_subcommand(eval)) {
      inputs = {{"estimate", estimate}, {"truth", truth}};
      et::ConfigMap config;
      config["units"] = units;
      config["relative"] = relative ? "true" : "false";
      return run_eval(inputs, config, out);
    }
    if (app.got_subcommand(overlay)) {
      inputs = {{"model", model}, {"intrinsics", intrinsics},
                {"frames", frames}, {"trajectory", trajectory}};
      return run_overlay(inputs, out);
    }
    if (app.got_subcommand(calibrate)) {
      inputs = {{"input", input}};
      return run_calibrate(inputs, out);
    }
    if (app.got_subcommand(rerun)) return run_rerun(manifest, out);
  } catch (const et::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
