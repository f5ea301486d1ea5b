// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panostage/dataset.hpp"
#include "panostage/error.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout_io.hpp"
#include "panostage/photometry.hpp"
#include "panostage/projection.hpp"
#include "panostage/radiance.hpp"
#include "panostage/scene.hpp"
#include "panostage/scene_io.hpp"

namespace panostage {

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateArgs {
  fs::path indoor;
  fs::path outdoor;
  std::optional<double> illuminance_lux;
  fs::path out_dir;
  int fisheye_side = 0;
};

inline json calibration_to_json(const CalibrationResult& r) {
  return {{"k", r.k},
          {"uniform_luminance_cdm2", r.uniform_luminance},
          {"mean_disk_luminance_cdm2", r.mean_disk_luminance},
          {"illuminance_lux", r.illuminance_used}};
}

// Writes indoor.exr, outdoor.exr and calibration.json into out_dir.
inline CalibrationResult cmd_calibrate(const CalibrateArgs& a) {
  if (!a.illuminance_lux) throw ValidationError("calibrate: the measured illuminance (--lux) is required");
  const HdrPanorama indoor = load_panorama(a.indoor);
  const HdrPanorama outdoor = load_panorama(a.outdoor);
  const CalibratedPair pair = calibrate_pair(indoor, outdoor, *a.illuminance_lux, {a.fisheye_side});
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir.string() + ": " + ec.message());
  save_panorama(a.out_dir / "indoor.exr", pair.indoor);
  save_panorama(a.out_dir / "outdoor.exr", pair.outdoor);
  write_text(a.out_dir / "calibration.json", calibration_to_json(pair.result).dump(2) + "\n");
  return pair.result;
}

// ---------------------------------------------------------------------------
// project
// ---------------------------------------------------------------------------

enum class ProjectMode { fisheye, perspective };

inline ProjectMode parse_project_mode(const std::string& s) {
  if (s == "fisheye") return ProjectMode::fisheye;
  if (s == "perspective") return ProjectMode::perspective;
  throw ValidationError("unknown projection mode '" + s + "' (expected fisheye or perspective)");
}

struct ProjectArgs {
  fs::path pano;
  ProjectMode mode = ProjectMode::perspective;
  fs::path out;
  int side = 0;  // fisheye side, 0: panorama height
  PerspectiveView view;
};

inline RgbImage project_image(const HdrPanorama& pano, const ProjectArgs& a) {
  if (a.mode == ProjectMode::fisheye) {
    require(a.side >= 0, "fisheye side must be positive");
    return front_fisheye(pano, {a.side}).pixels();
  }
  return pano_to_perspective(pano, a.view);
}

inline RgbImage cmd_project(const ProjectArgs& a) {
  const HdrPanorama pano = load_panorama(a.pano);
  RgbImage img = project_image(pano, a);
  save_image(a.out, img);
  return img;
}

// ---------------------------------------------------------------------------
// merge
// ---------------------------------------------------------------------------

inline HdrPanorama cmd_merge(const fs::path& sidecar, const fs::path& out) {
  HdrPanorama pano = merge_brackets(load_bracket(sidecar));
  save_panorama(out, pano);
  return pano;
}

// ---------------------------------------------------------------------------
// stage
// ---------------------------------------------------------------------------

struct StageArgs {
  fs::path layout;
  std::optional<fs::path> mask;
  fs::path components_dir;
  std::vector<std::string> sequence;
  CornerPolicy policy = CornerPolicy::scale_last;
  fs::path env;
  fs::path out_dir;
  std::optional<fs::path> materials;  // {"slot": {"albedo": [r,g,b]}, ...}
  std::optional<fs::path> emitters;   // [{"kind": "point", ...}, ...]
  double orientation_deg = 0;
  double wall_threshold = 0.5;
  std::uint64_t seed = 0;
  int spp = 16;
  PerspectiveView view;
};

inline std::map<std::string, Material> materials_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("materials must be a JSON object keyed by slot");
  std::map<std::string, Material> out;
  for (const auto& [slot, m] : j.items()) out[slot] = material_from_json(m, slot);
  return out;
}

inline std::vector<Emitter> emitters_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("emitters must be a JSON array");
  std::vector<Emitter> out;
  for (const auto& e : j) out.push_back(emitter_from_json(e));
  return out;
}

// Layout with kitchen walls taken from the mask when one is given.
inline RoomLayout staged_layout(const RoomLayout& layout, const std::optional<std::vector<bool>>& mask, double threshold) {
  if (!mask) return layout;
  return select_kitchen_walls(layout, *mask, {threshold});
}

// Canonical plan.json text shared by the CLI and the service.
inline std::string plan_json_text(const PlacementPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

struct StageResult {
  PlacementPlan plan;
  SceneDescription scene;
  RgbImage preview;
};

// Places the sequence, assembles and exports the scene, and renders a preview.
// Outputs: plan.json, scene/ (scene.json, meshes, env.exr), preview.exr, preview.png.
inline StageResult cmd_stage(const StageArgs& a) {
  if (a.sequence.empty()) throw ValidationError("stage: the component sequence is empty");
  std::optional<std::vector<bool>> mask;
  if (a.mask) mask = load_mask(*a.mask);
  const RoomLayout layout = staged_layout(load_layout(a.layout), mask, a.wall_threshold);
  const auto library = load_component_library(a.components_dir);
  const HdrPanorama env = load_panorama(a.env);
  std::map<std::string, Material> materials;
  if (a.materials) materials = materials_from_json(detail::parse_json_text(read_text(*a.materials), a.materials->string()));
  std::vector<Emitter> emitters;
  if (a.emitters) emitters = emitters_from_json(detail::parse_json_text(read_text(*a.emitters), a.emitters->string()));

  StageResult r;
  r.plan = place_components(layout, library, a.sequence, a.policy);
  r.scene = assemble_scene(layout, r.plan, library, env, materials, emitters, {a.orientation_deg});
  r.preview = preview_render(r.scene, a.view, {a.spp, a.seed, std::nullopt});

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir.string() + ": " + ec.message());
  write_text(a.out_dir / "plan.json", plan_json_text(r.plan));
  export_scene(r.scene, a.out_dir / "scene");
  write_exr(a.out_dir / "preview.exr", r.preview);
  write_binary(a.out_dir / "preview.png", encode_preview_png(r.preview));
  return r;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

// Estimates CSV: scene_id,L_lowcost_cdm2
inline std::map<std::string, double> load_estimates(const fs::path& path) {
  std::istringstream is(read_text(path));
  std::string line;
  std::getline(is, line);
  const auto header = csv::split_record(line);
  if (header.size() != 2 || csv::trim(header[0]) != "scene_id" || csv::trim(header[1]) != "L_lowcost_cdm2")
    throw ValidationError("estimates CSV must have the header scene_id,L_lowcost_cdm2");
  std::map<std::string, double> out;
  while (std::getline(is, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_record(line);
    if (f.size() != 2) throw ValidationError("estimates CSV: expected two fields in '" + line + "'");
    if (!out.emplace(csv::trim(f[0]), parse_number(f[1], "L_lowcost_cdm2")).second)
      throw ValidationError("estimates CSV: duplicate scene_id " + f[0]);
  }
  return out;
}

struct StatsArgs {
  fs::path manifest;
  fs::path estimates;
  fs::path out;
  ManifestOptions manifest_options;
};

struct StatsResult {
  Manifest manifest;
  DatasetStats stats;
};

inline StatsResult cmd_stats(const StatsArgs& a) {
  StatsResult r;
  r.manifest = load_manifest(a.manifest, a.manifest_options);
  const auto est = load_estimates(a.estimates);
  std::vector<SceneEntry> used;
  std::vector<double> values;
  for (const auto& e : r.manifest.entries) {
    auto it = est.find(e.scene_id);
    if (it == est.end()) {
      r.manifest.warnings.push_back("no estimate for scene " + e.scene_id);
      continue;
    }
    used.push_back(e);
    values.push_back(it->second);
  }
  r.stats = dataset_stats(used, values);
  std::ostringstream os;
  write_stats_csv(os, r.stats.series);
  write_text(a.out, os.str());
  return r;
}

}  // namespace panostage
