// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout_io.hpp"
#include "panostage/mesh.hpp"
#include "panostage/scene.hpp"

namespace panostage {

inline constexpr int kSceneSchemaVersion = 1;

namespace detail {

inline json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json rgb_to_json(const Rgbd& c) { return json::array({c.r, c.g, c.b}); }

inline Eigen::Vector3d vec3_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + ": expected three numbers");
  for (const auto& x : j)
    if (!x.is_number()) throw ValidationError(what + ": expected three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Rgbd rgb_from_json(const json& j, const std::string& what) {
  const Eigen::Vector3d v = vec3_from_json(j, what);
  return {v.x(), v.y(), v.z()};
}

inline std::string mesh_file_name(std::size_t index, const std::string& name) {
  std::string clean;
  for (char c : name) clean += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%03zu_", index);
  return "meshes/" + std::string(prefix) + clean + ".obj";
}

}  // namespace detail

inline json material_to_json(const Material& m) {
  json j = {{"albedo", detail::rgb_to_json(m.albedo)}};
  if (!m.texture.empty()) j["texture"] = m.texture;
  if (m.specular) j["specular"] = *m.specular;
  return j;
}

inline Material material_from_json(const json& j, const std::string& slot) {
  const std::string what = "material '" + slot + "'";
  if (!j.is_object()) throw ValidationError(what + " must be an object");
  detail::reject_unknown_keys(j, {"albedo", "texture", "specular"}, what);
  Material m;
  if (!j.contains("albedo")) throw ValidationError(what + ": missing \"albedo\"");
  const json& a = j["albedo"];
  m.albedo = a.is_number() ? Rgbd(a.get<double>()) : detail::rgb_from_json(a, what);
  if (j.contains("texture")) m.texture = detail::get_field<std::string>(j, "texture", what);
  if (j.contains("specular")) m.specular = detail::get_field<double>(j, "specular", what);
  validate_material(m, slot);
  return m;
}

inline json emitter_to_json(const Emitter& e) {
  if (e.kind == EmitterKind::point)
    return {{"kind", "point"}, {"position_m", detail::vec3_to_json(e.position)}, {"power_w", detail::rgb_to_json(e.power)}};
  return {{"kind", "area"},
          {"center_m", detail::vec3_to_json(e.position)},
          {"u_m", detail::vec3_to_json(e.u)},
          {"v_m", detail::vec3_to_json(e.v)},
          {"radiance", detail::rgb_to_json(e.radiance)}};
}

inline Emitter emitter_from_json(const json& j) {
  const std::string what = "emitter";
  Emitter e;
  const auto kind = detail::get_field<std::string>(j, "kind", what);
  if (kind == "point") {
    detail::reject_unknown_keys(j, {"kind", "position_m", "power_w"}, what);
    e.kind = EmitterKind::point;
    e.position = detail::vec3_from_json(detail::get_field<json>(j, "position_m", what), what);
    e.power = detail::rgb_from_json(detail::get_field<json>(j, "power_w", what), what);
  } else if (kind == "area") {
    detail::reject_unknown_keys(j, {"kind", "center_m", "u_m", "v_m", "radiance"}, what);
    e.kind = EmitterKind::area;
    e.position = detail::vec3_from_json(detail::get_field<json>(j, "center_m", what), what);
    e.u = detail::vec3_from_json(detail::get_field<json>(j, "u_m", what), what);
    e.v = detail::vec3_from_json(detail::get_field<json>(j, "v_m", what), what);
    e.radiance = detail::rgb_from_json(detail::get_field<json>(j, "radiance", what), what);
    require(e.u.cross(e.v).norm() > 0, "area emitter: u and v must span a rectangle");
  } else {
    throw ValidationError("emitter: unknown kind '" + kind + "'");
  }
  for (double c : {e.power.r, e.power.g, e.power.b, e.radiance.r, e.radiance.g, e.radiance.b})
    require(std::isfinite(c) && c >= 0, "emitter: power and radiance must be finite and non-negative");
  return e;
}

// Scene graph as JSON. Mesh and environment paths are relative to the
// scene directory; `mesh_paths` must be parallel to scene.objects.
inline json scene_to_json(const SceneDescription& scene, const std::vector<std::string>& mesh_paths) {
  json objects = json::array();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    json j = {{"name", o.name}, {"kind", o.kind}, {"mesh", mesh_paths.at(i)}, {"transform", matrix_to_json(o.transform())}};
    if (!o.component.empty()) j["component"] = o.component;
    if (o.placement)
      j["placement"] = {{"theta_z", o.placement->theta_z},
                        {"t_m", {o.placement->t_x, o.placement->t_y}},
                        {"width_scale", o.placement->width_scale}};
    objects.push_back(std::move(j));
  }
  json materials = json::object();
  for (const auto& [slot, m] : scene.materials) materials[slot] = material_to_json(m);
  json emitters = json::array();
  for (const auto& e : scene.emitters) emitters.push_back(emitter_to_json(e));
  json windows = json::array();
  for (const auto& w : scene.windows)
    windows.push_back({{"wall", w.wall}, {"offset_m", w.offset_m}, {"width_m", w.width_m}, {"sill_m", w.sill_m}, {"height_m", w.height_m}});

  json j = {{"schema_version", kSceneSchemaVersion},
            {"objects", objects},
            {"materials", materials},
            {"emitters", emitters},
            {"windows", windows},
            {"camera_m", detail::vec3_to_json(scene.camera)}};
  if (scene.environment) {
    const auto& env = *scene.environment;
    j["environment"] = {{"path", "env.exr"}, {"rotation_deg", env.rotation_deg}};
    if (env.map.calibration()) j["environment"]["calibration_k"] = *env.map.calibration();
  }
  if (scene.room) {
    json corners = json::array();
    for (const auto& c : scene.room->corners) corners.push_back({c.x(), c.y()});
    j["room"] = {{"corners_m", corners}, {"height_m", scene.room->height_m}};
  }
  return j;
}

// Writes scene.json, one OBJ per object (in its local frame) and env.exr.
inline void export_scene(const SceneDescription& scene, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "meshes", ec);
  if (ec) throw IoError("cannot create scene directory " + dir.string() + ": " + ec.message());
  std::vector<std::string> mesh_paths;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    mesh_paths.push_back(detail::mesh_file_name(i, scene.objects[i].name));
    write_obj(dir / mesh_paths.back(), scene.objects[i].local_mesh);
  }
  if (scene.environment) write_exr(dir / "env.exr", scene.environment->map.pixels(), scene.environment->map.calibration());
  write_text(dir / "scene.json", scene_to_json(scene, mesh_paths).dump(2) + "\n");
}

inline Eigen::Vector3d transform_point(const Eigen::Matrix4d& m, const Eigen::Vector3d& p) {
  return (m * p.homogeneous()).head<3>();
}

inline SceneDescription import_scene(const fs::path& dir) {
  const std::string what = "scene.json";
  const json j = detail::parse_json_text(read_text(dir / "scene.json"), what);
  detail::reject_unknown_keys(j, {"schema_version", "objects", "materials", "emitters", "windows", "camera_m", "environment", "room"}, what);
  if (detail::get_field<int>(j, "schema_version", what) != kSceneSchemaVersion)
    throw ValidationError("scene.json: unsupported schema_version");
  SceneDescription scene;
  for (const auto& o : detail::get_field<json>(j, "objects", what)) {
    detail::reject_unknown_keys(o, {"name", "kind", "component", "mesh", "transform", "placement"}, "scene object");
    SceneObject obj;
    obj.name = detail::get_field<std::string>(o, "name", what);
    obj.kind = detail::get_field<std::string>(o, "kind", what);
    if (o.contains("component")) obj.component = detail::get_field<std::string>(o, "component", what);
    obj.local_mesh = read_obj(dir / detail::get_field<std::string>(o, "mesh", what));
    if (o.contains("placement")) {
      const json& p = o["placement"];
      const auto t = detail::get_field<std::vector<double>>(p, "t_m", what);
      require(t.size() == 2, "scene object: placement t_m must have two entries");
      obj.placement = PlacementTransform{detail::get_field<double>(p, "theta_z", what), t[0], t[1],
                                         detail::get_field<double>(p, "width_scale", what)};
    }
    const Eigen::Matrix4d m = matrix_from_json(detail::get_field<json>(o, "transform", what));
    obj.world_mesh = obj.local_mesh;
    for (auto& v : obj.world_mesh.positions) v = transform_point(m, v);
    scene.objects.push_back(std::move(obj));
  }
  const json materials = detail::get_field<json>(j, "materials", what);
  for (const auto& [slot, m] : materials.items())
    scene.materials[slot] = material_from_json(m, slot);
  for (const auto& e : detail::get_field<json>(j, "emitters", what)) scene.emitters.push_back(emitter_from_json(e));
  for (const auto& w : detail::get_field<json>(j, "windows", what))
    scene.windows.push_back({detail::get_field<int>(w, "wall", "window"), detail::get_field<double>(w, "offset_m", "window"),
                             detail::get_field<double>(w, "width_m", "window"), detail::get_field<double>(w, "sill_m", "window"),
                             detail::get_field<double>(w, "height_m", "window")});
  scene.camera = detail::vec3_from_json(detail::get_field<json>(j, "camera_m", what), what);
  if (j.contains("environment")) {
    const json& e = j["environment"];
    const ExrImage img = read_exr(dir / detail::get_field<std::string>(e, "path", what));
    std::optional<double> k = img.calibration;
    if (e.contains("calibration_k")) k = detail::get_field<double>(e, "calibration_k", what);
    scene.environment = Environment{HdrPanorama(img.pixels, k), detail::get_field<double>(e, "rotation_deg", what)};
  }
  if (j.contains("room")) {
    RoomExtent room;
    for (const auto& c : detail::get_field<json>(j["room"], "corners_m", what)) room.corners.push_back(detail::to_vec2(c, what));
    room.height_m = detail::get_field<double>(j["room"], "height_m", what);
    scene.room = std::move(room);
  }
  return scene;
}

struct SceneComparison {
  double max_vertex_difference_m = 0;
  std::vector<std::string> differences;

  bool clean(double tolerance_m = 1e-9) const { return differences.empty() && max_vertex_difference_m < tolerance_m; }
};

inline SceneComparison compare_scenes(const SceneDescription& a, const SceneDescription& b) {
  SceneComparison r;
  auto differ = [&](const std::string& s) { r.differences.push_back(s); };
  if (a.objects.size() != b.objects.size()) {
    differ("object count differs");
  } else {
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      const auto& x = a.objects[i];
      const auto& y = b.objects[i];
      if (x.name != y.name || x.kind != y.kind || x.component != y.component) differ("object " + std::to_string(i) + " identity differs");
      if (x.world_mesh.triangles != y.world_mesh.triangles || x.world_mesh.positions.size() != y.world_mesh.positions.size()) {
        differ("object " + x.name + " topology differs");
        continue;
      }
      for (std::size_t f = 0; f < x.world_mesh.triangles.size(); ++f)
        if (x.world_mesh.face_slot_name(f) != y.world_mesh.face_slot_name(f)) {
          differ("object " + x.name + " material slots differ");
          break;
        }
      for (std::size_t v = 0; v < x.world_mesh.positions.size(); ++v)
        r.max_vertex_difference_m =
            std::max(r.max_vertex_difference_m, (x.world_mesh.positions[v] - y.world_mesh.positions[v]).cwiseAbs().maxCoeff());
    }
  }
  if (a.materials != b.materials) differ("materials differ");
  if (a.emitters.size() != b.emitters.size()) differ("emitter count differs");
  else
    for (std::size_t i = 0; i < a.emitters.size(); ++i)
      if (emitter_to_json(a.emitters[i]) != emitter_to_json(b.emitters[i])) differ("emitter " + std::to_string(i) + " differs");
  if (a.windows.size() != b.windows.size()) differ("window count differs");
  if (a.camera != b.camera) differ("camera differs");
  if (a.environment.has_value() != b.environment.has_value()) {
    differ("environment presence differs");
  } else if (a.environment) {
    if (!(a.environment->map.pixels() == b.environment->map.pixels())) differ("environment pixels differ");
    if (a.environment->map.calibration() != b.environment->map.calibration()) differ("environment calibration differs");
    if (a.environment->rotation_deg != b.environment->rotation_deg) differ("environment rotation differs");
  }
  if (a.room.has_value() != b.room.has_value()) differ("room presence differs");
  else if (a.room && (a.room->corners != b.room->corners || a.room->height_m != b.room->height_m)) differ("room differs");
  return r;
}

}  // namespace panostage
