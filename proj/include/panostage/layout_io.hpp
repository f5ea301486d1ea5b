// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout.hpp"

namespace panostage {

using nlohmann::json;

namespace detail {

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + what + ": " + e.what());
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ValidationError(what + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(what + ": field \"" + key + "\" has the wrong type");
  }
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError(what + ": unknown key \"" + key + "\"");
  }
}

inline Vec2 to_vec2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ValidationError(what + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

// {"corners_m":[[x,y],...], "height_m":h, "kitchen_walls":[i,...],
//  "windows":[{"wall":i,"offset_m":..,"width_m":..,"sill_m":..,"height_m":..}],
//  "camera_m":[x,y], "camera_height_m":..}
inline RoomLayout layout_from_json(const json& j) {
  const std::string what = "layout";
  if (!j.is_object()) throw ValidationError("layout must be a JSON object");
  detail::reject_unknown_keys(j, {"corners_m", "height_m", "kitchen_walls", "windows", "camera_m", "camera_height_m"}, what);
  RoomLayout l;
  const json& corners = j.contains("corners_m") ? j["corners_m"] : throw ValidationError("layout: missing \"corners_m\"");
  if (!corners.is_array()) throw ValidationError("layout: corners_m must be an array");
  for (const auto& c : corners) l.corners.push_back(detail::to_vec2(c, what));
  l.height_m = detail::get_field<double>(j, "height_m", what);
  if (j.contains("camera_m")) l.camera = detail::to_vec2(j["camera_m"], what);
  if (j.contains("camera_height_m")) l.camera_height_m = detail::get_field<double>(j, "camera_height_m", what);
  l.kitchen_walls.assign(l.corners.size(), false);
  if (j.contains("kitchen_walls")) {
    for (int i : detail::get_field<std::vector<int>>(j, "kitchen_walls", what)) {
      require(i >= 0 && static_cast<std::size_t>(i) < l.corners.size(), "layout: kitchen wall index out of range");
      l.kitchen_walls[static_cast<std::size_t>(i)] = true;
    }
  }
  if (j.contains("windows")) {
    for (const auto& w : j["windows"]) {
      detail::reject_unknown_keys(w, {"wall", "offset_m", "width_m", "sill_m", "height_m"}, "window");
      l.windows.push_back({detail::get_field<int>(w, "wall", "window"), detail::get_field<double>(w, "offset_m", "window"),
                           detail::get_field<double>(w, "width_m", "window"), detail::get_field<double>(w, "sill_m", "window"),
                           detail::get_field<double>(w, "height_m", "window")});
    }
  }
  validate_layout(l);
  return l;
}

inline json layout_to_json(const RoomLayout& l) {
  json j;
  j["corners_m"] = json::array();
  for (const auto& c : l.corners) j["corners_m"].push_back({c.x(), c.y()});
  j["height_m"] = l.height_m;
  j["kitchen_walls"] = json::array();
  for (std::size_t i = 0; i < l.kitchen_walls.size(); ++i)
    if (l.kitchen_walls[i]) j["kitchen_walls"].push_back(i);
  if (!l.windows.empty()) {
    j["windows"] = json::array();
    for (const auto& w : l.windows)
      j["windows"].push_back({{"wall", w.wall}, {"offset_m", w.offset_m}, {"width_m", w.width_m}, {"sill_m", w.sill_m}, {"height_m", w.height_m}});
  }
  if (l.camera) j["camera_m"] = {l.camera->x(), l.camera->y()};
  j["camera_height_m"] = l.camera_height_m;
  return j;
}

inline RoomLayout load_layout(const fs::path& path) {
  return layout_from_json(detail::parse_json_text(read_text(path), path.string()));
}

// Kitchen mask: a PNG (a column is masked when more than half of its rows
// are nonzero; normally 1 x w) or run-length JSON
// {"width": w, "runs": [[start, length], ...]}.
inline std::vector<bool> mask_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("mask must be a JSON object");
  detail::reject_unknown_keys(j, {"width", "runs"}, "mask");
  const int width = detail::get_field<int>(j, "width", "mask");
  require(width >= 0, "mask width must be nonnegative");
  std::vector<bool> mask(static_cast<std::size_t>(width), false);
  if (j.contains("runs")) {
    for (const auto& r : j["runs"]) {
      if (!r.is_array() || r.size() != 2) throw ValidationError("mask run must be [start, length]");
      const int start = r[0].get<int>(), len = r[1].get<int>();
      require(start >= 0 && len >= 0 && start + len <= width, "mask run out of range");
      std::fill(mask.begin() + start, mask.begin() + start + len, true);
    }
  }
  return mask;
}

inline json mask_to_json(const std::vector<bool>& mask) {
  json runs = json::array();
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  return {{"width", mask.size()}, {"runs", runs}};
}

inline std::vector<bool> load_mask(const fs::path& path) {
  if (lower_extension(path) == ".json") return mask_from_json(detail::parse_json_text(read_text(path), path.string()));
  const RgbImage img = read_png(path);
  std::vector<bool> mask(static_cast<std::size_t>(img.width()), false);
  for (int x = 0; x < img.width(); ++x) {
    int on = 0;
    for (int y = 0; y < img.height(); ++y) {
      const Rgb& p = img(x, y);
      on += (p.r > 0 || p.g > 0 || p.b > 0) ? 1 : 0;
    }
    mask[static_cast<std::size_t>(x)] = 2 * on > img.height();
  }
  return mask;
}

// Component metadata JSON; `mesh` paths resolve against `base_dir`.
inline KitchenComponent component_from_json(const json& j, const std::string& default_name, const fs::path& base_dir) {
  const std::string what = "component " + default_name;
  if (!j.is_object()) throw ValidationError(what + " must be a JSON object");
  detail::reject_unknown_keys(j, {"name", "category", "width_m", "depth_m", "height_m", "mesh", "anchor_m", "material_slots"}, what);
  KitchenComponent c;
  c.name = j.contains("name") ? detail::get_field<std::string>(j, "name", what) : default_name;
  c.category = parse_category(detail::get_field<std::string>(j, "category", what));
  if (j.contains("mesh")) c.mesh_path = base_dir / detail::get_field<std::string>(j, "mesh", what);
  if (j.contains("anchor_m")) {
    const auto a = detail::get_field<std::vector<double>>(j, "anchor_m", what);
    require(a.size() == 3, what + ": anchor_m must have three entries");
    c.anchor = Eigen::Vector3d(a[0], a[1], a[2]);
  }
  if (j.contains("material_slots")) c.material_slots = detail::get_field<std::vector<std::string>>(j, "material_slots", what);
  const bool has_dims = j.contains("width_m") && j.contains("depth_m") && j.contains("height_m");
  if (has_dims) {
    c.width_m = detail::get_field<double>(j, "width_m", what);
    c.depth_m = detail::get_field<double>(j, "depth_m", what);
    c.height_m = detail::get_field<double>(j, "height_m", what);
  } else if (!c.mesh_path.empty()) {
    const Bounds3 b = bounds(read_obj(c.mesh_path));
    require(b.valid(), what + ": mesh has no vertices");
    c.width_m = b.max.x() - b.min.x();
    c.depth_m = b.max.y() - b.min.y();
    c.height_m = b.max.z() - b.min.z();
  } else {
    throw ValidationError(what + ": needs width_m/depth_m/height_m or a mesh");
  }
  validate_component(c);
  return c;
}

inline json component_to_json(const KitchenComponent& c) {
  json j{{"name", c.name}, {"category", to_string(c.category)}, {"width_m", c.width_m}, {"depth_m", c.depth_m},
         {"height_m", c.height_m}, {"material_slots", c.material_slots}};
  if (!c.mesh_path.empty()) j["mesh"] = c.mesh_path.filename().string();
  if (c.anchor) j["anchor_m"] = {c.anchor->x(), c.anchor->y(), c.anchor->z()};
  return j;
}

// Every *.json file in `dir` is one component; results are sorted by name.
inline std::vector<KitchenComponent> load_component_library(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("component library is not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && lower_extension(entry.path()) == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<KitchenComponent> out;
  std::set<std::string> names;
  for (const auto& f : files) {
    out.push_back(component_from_json(detail::parse_json_text(read_text(f), f.string()), f.stem().string(), dir));
    require(names.insert(out.back().name).second, "duplicate component name '" + out.back().name + "'");
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

inline json matrix_to_json(const Eigen::Matrix4d& m) {
  json a = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
  return a;
}

inline Eigen::Matrix4d matrix_from_json(const json& j) {
  if (!j.is_array() || j.size() != 16) throw ValidationError("transform must be 16 numbers (row-major 4x4)");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j[static_cast<std::size_t>(r * 4 + c)].get<double>();
  return m;
}

inline json plan_to_json(const PlacementPlan& plan) {
  json entries = json::array();
  for (const auto& e : plan.entries) {
    entries.push_back({{"component", e.component},
                       {"sequence_index", e.sequence_index},
                       {"wall", e.wall},
                       {"offset_m", e.offset_m},
                       {"width_m", e.width_m},
                       {"effective_width_m", e.effective_width_m},
                       {"depth_m", e.depth_m},
                       {"height_m", e.height_m},
                       {"theta_z", e.transform.theta_z},
                       {"t_m", {e.transform.t_x, e.transform.t_y}},
                       {"width_scale", e.transform.width_scale},
                       {"matrix", matrix_to_json(placement_matrix(e.transform))}});
  }
  return {{"layout_type", to_string(plan.type)},
          {"corner_policy", to_string(plan.policy)},
          {"wall_run", plan.wall_run},
          {"entries", entries}};
}

inline PlacementPlan plan_from_json(const json& j) {
  const std::string what = "plan";
  PlacementPlan plan;
  const auto type = detail::get_field<std::string>(j, "layout_type", what);
  if (type == "I") plan.type = LayoutType::I;
  else if (type == "L") plan.type = LayoutType::L;
  else if (type == "U") plan.type = LayoutType::U;
  else throw ValidationError("plan: unknown layout type " + type);
  plan.policy = parse_corner_policy(detail::get_field<std::string>(j, "corner_policy", what));
  plan.wall_run = detail::get_field<std::vector<int>>(j, "wall_run", what);
  for (const auto& e : detail::get_field<json>(j, "entries", what)) {
    PlacementEntry p;
    p.component = detail::get_field<std::string>(e, "component", what);
    p.sequence_index = detail::get_field<std::size_t>(e, "sequence_index", what);
    p.wall = detail::get_field<int>(e, "wall", what);
    p.offset_m = detail::get_field<double>(e, "offset_m", what);
    p.width_m = detail::get_field<double>(e, "width_m", what);
    p.effective_width_m = detail::get_field<double>(e, "effective_width_m", what);
    p.depth_m = detail::get_field<double>(e, "depth_m", what);
    p.height_m = detail::get_field<double>(e, "height_m", what);
    p.transform.theta_z = detail::get_field<double>(e, "theta_z", what);
    const auto t = detail::get_field<std::vector<double>>(e, "t_m", what);
    require(t.size() == 2, "plan: t_m must have two entries");
    p.transform.t_x = t[0];
    p.transform.t_y = t[1];
    p.transform.width_scale = detail::get_field<double>(e, "width_scale", what);
    plan.entries.push_back(p);
  }
  return plan;
}

}  // namespace panostage
