// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "panostage/commands.hpp"
#include "panostage/error.hpp"
#include "panostage/service.hpp"

namespace panostage {

// Reads TOML (CLI11's native format) or JSON job files. JSON objects nest
// like TOML sections: {"stage": {"layout": "room.json", "sequence": ["a"]}}.
class JobConfigFormat : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream is(text);
      return CLI::ConfigTOML::from_config(is);
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("malformed JSON config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config values must be strings, numbers, booleans or arrays of those");
  }

  static void flatten(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      out.push_back(std::move(item));
    }
  }
};

inline void add_view_options(CLI::App* cmd, PerspectiveView& view) {
  cmd->add_option("--yaw", view.yaw_deg, "View yaw in degrees (clockwise from the panorama center)")->capture_default_str();
  cmd->add_option("--pitch", view.pitch_deg, "View pitch in degrees, in (-90, 90)")->capture_default_str();
  cmd->add_option("--fov", view.fov_deg, "Horizontal field of view in degrees, in (0, 180)")->capture_default_str();
  cmd->add_option("--width", view.width, "Output width in pixels")->capture_default_str();
  cmd->add_option("--height", view.height, "Output height in pixels")->capture_default_str();
}

inline int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->exit_code();
  if (dynamic_cast<const json::exception*>(&e)) return static_cast<int>(ErrorKind::validation);
  return static_cast<int>(ErrorKind::numeric);
}

// Entry point shared by the executable and the tests. Returns the exit code.
inline int run_cli(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"panostage: HDR panorama calibration and kitchen staging", "panostage"};
  app.config_formatter(std::make_shared<JobConfigFormat>());
  app.set_config("--config", "", "Job file (TOML or JSON); options go under a section named after the subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  CalibrateArgs cal;
  double lux = 0;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate an indoor/outdoor panorama pair from a measured illuminance");
  calibrate->add_option("--indoor", cal.indoor, "Indoor HDR panorama")->required();
  calibrate->add_option("--outdoor", cal.outdoor, "Outdoor HDR panorama")->required();
  auto* lux_opt = calibrate->add_option("--lux", lux, "Illuminance measured at the camera, lux")->required();
  calibrate->add_option("--out", cal.out_dir, "Output directory")->required();
  calibrate->add_option("--fisheye-side", cal.fisheye_side, "Fisheye side in pixels (0: panorama height)")->capture_default_str();

  ProjectArgs proj;
  std::string mode = "perspective";
  auto* project = app.add_subcommand("project", "Reproject a panorama to a fisheye or perspective image");
  project->add_option("--pano", proj.pano, "Input panorama")->required();
  project->add_option("--mode", mode, "fisheye or perspective")->check(CLI::IsMember({"fisheye", "perspective"}))->capture_default_str();
  project->add_option("--out", proj.out, "Output image (.exr, .hdr or .png)")->required();
  project->add_option("--side", proj.side, "Fisheye side in pixels (0: panorama height)")->capture_default_str();
  add_view_options(project, proj.view);

  StageArgs stage;
  std::string policy = "scale_last";
  std::string mask_path, materials_path, emitters_path;
  auto* stage_cmd = app.add_subcommand("stage", "Place components along kitchen walls, export the scene and render a preview");
  stage_cmd->add_option("--layout", stage.layout, "Room layout JSON")->required();
  stage_cmd->add_option("--mask", mask_path, "Kitchen mask (JSON runs or PNG); selects kitchen walls");
  stage_cmd->add_option("--components", stage.components_dir, "Component library directory")->required();
  stage_cmd->add_option("--sequence", stage.sequence, "Component names in placement order")->delimiter(',')->required();
  stage_cmd->add_option("--policy", policy, "Corner policy: scale_last or leave_gap")
      ->check(CLI::IsMember({"scale_last", "leave_gap"}))
      ->capture_default_str();
  stage_cmd->add_option("--env", stage.env, "Calibrated outdoor panorama (EXR)")->required();
  stage_cmd->add_option("--out", stage.out_dir, "Output directory")->required();
  stage_cmd->add_option("--materials", materials_path, "Material overrides JSON");
  stage_cmd->add_option("--emitters", emitters_path, "Emitters JSON");
  stage_cmd->add_option("--orientation", stage.orientation_deg, "Environment rotation in degrees")->capture_default_str();
  stage_cmd->add_option("--wall-threshold", stage.wall_threshold, "Masked column fraction that flags a wall")->capture_default_str();
  stage_cmd->add_option("--seed", stage.seed, "Random seed")->capture_default_str();
  stage_cmd->add_option("--spp", stage.spp, "Preview samples per pixel")->capture_default_str();
  add_view_options(stage_cmd, stage.view);

  fs::path bracket, merged;
  auto* merge = app.add_subcommand("merge", "Merge an exposure bracket into an HDR panorama");
  merge->add_option("--bracket", bracket, "Bracket sidecar JSON")->required();
  merge->add_option("--out", merged, "Output panorama")->required();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Luminance error statistics over a dataset manifest");
  stats_cmd->add_option("--manifest", stats.manifest, "Manifest (CSV or JSON)")->required();
  stats_cmd->add_option("--estimates", stats.estimates, "CSV with scene_id,L_lowcost_cdm2")->required();
  stats_cmd->add_option("--out", stats.out, "Output CSV")->required();
  stats_cmd->add_flag("--check-files", stats.manifest_options.check_files, "Require panoramas to exist and be 2:1");
  stats_cmd->add_option("--pair-window", stats.manifest_options.pair_window_s, "Max indoor/outdoor capture gap, seconds")
      ->capture_default_str();

  fs::path workspace;
  int port = 8080;
  std::string host = "127.0.0.1";
  ServiceOptions service_opts;
  auto* serve = app.add_subcommand("serve", "Serve the staging HTTP API for a workspace");
  serve->add_option("--workspace", workspace, "Workspace directory containing workspace.json")->required();
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--timeout", service_opts.render_timeout_s, "Seconds a preview request waits before returning a job id")
      ->capture_default_str();
  serve->add_option("--render-threads", service_opts.render_threads, "Render worker threads")->capture_default_str();

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream help;
    app.exit(e, help, err);
    return static_cast<int>(ErrorKind::validation);
  }

  try {
    if (*calibrate) {
      if (lux_opt->count() > 0) cal.illuminance_lux = lux;
      const auto r = cmd_calibrate(cal);
      out << calibration_to_json(r).dump(2) << '\n';
    } else if (*project) {
      proj.mode = parse_project_mode(mode);
      const RgbImage img = cmd_project(proj);
      out << "wrote " << proj.out.string() << " (" << img.width() << "x" << img.height() << ")\n";
    } else if (*stage_cmd) {
      stage.policy = parse_corner_policy(policy);
      if (!mask_path.empty()) stage.mask = mask_path;
      if (!materials_path.empty()) stage.materials = materials_path;
      if (!emitters_path.empty()) stage.emitters = emitters_path;
      const auto r = cmd_stage(stage);
      out << "layout " << to_string(r.plan.type) << ", " << r.plan.entries.size() << " components placed; wrote "
          << stage.out_dir.string() << '\n';
    } else if (*merge) {
      const auto pano = cmd_merge(bracket, merged);
      out << "wrote " << merged.string() << " (" << pano.width() << "x" << pano.height() << ")\n";
    } else if (*stats_cmd) {
      const auto r = cmd_stats(stats);
      for (const auto& d : r.manifest.rejected) err << "row " << d.row << " (" << d.scene_id << "): " << d.reason << '\n';
      for (const auto& w : r.manifest.warnings) err << "warning: " << w << '\n';
      out << r.stats.series.size() << " scenes, mean absolute error " << r.stats.stats.mean_absolute_error << " cd/m^2\n";
    } else if (*serve) {
      StagingService service(load_workspace(workspace), service_opts);
      httplib::Server server;
      service.bind(server);
      out << "serving " << workspace.string() << " on http://" << host << ':' << port << "/v1/" << std::endl;
      if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace panostage
