// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/geometry2d.hpp"
#include "panostage/mesh.hpp"
#include "panostage/projection.hpp"

namespace panostage {

// Rectangular opening on a wall plane, measured from the wall's start
// corner along the wall and from the floor upward.
struct WindowOpening {
  int wall = 0;
  double offset_m = 0;
  double width_m = 0;
  double sill_m = 0;
  double height_m = 0;
};

struct Wall {
  Vec2 start, end;
  Vec2 direction;       // unit, start -> end
  Vec2 inward_normal;   // unit, points into the room
  double length = 0;
};

// Floor plan (counter-clockwise corners, meters) extruded to a ceiling
// height. Wall i runs from corner i to corner i+1.
struct RoomLayout {
  std::vector<Vec2> corners;
  double height_m = 0;
  std::vector<bool> kitchen_walls;  // one flag per wall
  std::vector<WindowOpening> windows;
  std::optional<Vec2> camera;       // panorama camera in plan; centroid when unset
  double camera_height_m = 1.6;

  std::size_t wall_count() const { return corners.size(); }

  Wall wall(std::size_t i) const {
    Wall w;
    w.start = corners.at(i);
    w.end = corners.at((i + 1) % corners.size());
    const Vec2 e = w.end - w.start;
    w.length = e.norm();
    w.direction = e / w.length;
    w.inward_normal = Vec2(-w.direction.y(), w.direction.x());
    return w;
  }

  Vec2 camera_position() const { return camera ? *camera : polygon_centroid(corners); }
};

inline void validate_layout(const RoomLayout& l) {
  require(l.corners.size() >= 3, "room layout needs at least three corners");
  for (const auto& c : l.corners) require(c.allFinite(), "room corners must be finite");
  require(std::isfinite(l.height_m) && l.height_m > 0, "ceiling height must be positive");
  require(is_simple_polygon(l.corners), "floor polygon must be simple");
  require(signed_area(l.corners) > 0, "floor polygon corners must be counter-clockwise");
  require(l.kitchen_walls.empty() || l.kitchen_walls.size() == l.corners.size(),
          "kitchen wall flags must match the wall count");
  require(std::isfinite(l.camera_height_m) && l.camera_height_m > 0 && l.camera_height_m < l.height_m,
          "camera height must lie between floor and ceiling");
  if (l.camera) require(point_in_polygon(*l.camera, l.corners), "camera must lie inside the floor polygon");
  for (const auto& w : l.windows) {
    require(w.wall >= 0 && static_cast<std::size_t>(w.wall) < l.corners.size(), "window wall index out of range");
    const double len = l.wall(static_cast<std::size_t>(w.wall)).length;
    require(w.width_m > 0 && w.height_m > 0 && w.offset_m >= 0 && w.sill_m >= 0, "window dimensions must be positive");
    require(w.offset_m + w.width_m <= len + 1e-9 && w.sill_m + w.height_m <= l.height_m + 1e-9,
            "window must fit inside its wall");
  }
}

enum class LayoutType { I, L, U };

inline std::string to_string(LayoutType t) {
  switch (t) {
    case LayoutType::I: return "I";
    case LayoutType::L: return "L";
    case LayoutType::U: return "U";
  }
  return "?";
}

enum class CornerPolicy { scale_last, leave_gap };

inline std::string to_string(CornerPolicy p) { return p == CornerPolicy::scale_last ? "scale_last" : "leave_gap"; }

inline CornerPolicy parse_corner_policy(const std::string& s) {
  if (s == "scale_last" || s == "ScaleLast") return CornerPolicy::scale_last;
  if (s == "leave_gap" || s == "LeaveGap") return CornerPolicy::leave_gap;
  throw ValidationError("unknown corner policy '" + s + "' (expected scale_last or leave_gap)");
}

// ---------------------------------------------------------------------------
// Kitchen wall selection
// ---------------------------------------------------------------------------

struct WallSelectionOptions {
  double threshold = 0.5;  // flagged when the masked share of columns exceeds this
};

struct WallCoverage {
  std::vector<int> subtended;  // columns whose ray hits the wall first
  std::vector<int> masked;
};

// Casts one horizontal ray per panorama column from the camera; the ray of
// column c has azimuth 2*pi*((c + 0.5)/w - 0.5).
inline WallCoverage wall_coverage(const RoomLayout& layout, const std::vector<bool>& mask) {
  const std::size_t n = layout.wall_count();
  WallCoverage cov{std::vector<int>(n, 0), std::vector<int>(n, 0)};
  const Vec2 cam = layout.camera_position();
  require(point_in_polygon(cam, layout.corners), "camera must lie inside the floor polygon");
  const auto w = static_cast<double>(mask.size());
  for (std::size_t c = 0; c < mask.size(); ++c) {
    const double phi = kTwoPi * ((static_cast<double>(c) + 0.5) / w - 0.5);
    const Vec2 dir(std::cos(phi), -std::sin(phi));
    std::optional<std::size_t> best;
    double best_t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = ray_segment(cam, dir, layout.corners[i], layout.corners[(i + 1) % n]);
      if (t && (!best || *t < best_t)) {
        best = i;
        best_t = *t;
      }
    }
    if (!best) continue;
    ++cov.subtended[*best];
    if (mask[c]) ++cov.masked[*best];
  }
  return cov;
}

inline RoomLayout select_kitchen_walls(const RoomLayout& layout, const std::vector<bool>& mask,
                                       const WallSelectionOptions& opts = {}) {
  validate_layout(layout);
  if (mask.empty()) throw ValidationError("kitchen mask is empty");
  require(opts.threshold >= 0 && opts.threshold < 1, "selection threshold must lie in [0, 1)");
  const WallCoverage cov = wall_coverage(layout, mask);
  RoomLayout out = layout;
  out.kitchen_walls.assign(layout.wall_count(), false);
  bool any = false;
  for (std::size_t i = 0; i < layout.wall_count(); ++i) {
    if (cov.subtended[i] == 0) continue;
    const double share = static_cast<double>(cov.masked[i]) / cov.subtended[i];
    if (share > opts.threshold) {
      out.kitchen_walls[i] = true;
      any = true;
    }
  }
  if (!any) throw ValidationError("no kitchen wall: no wall exceeds the mask coverage threshold");
  return out;
}

// Flagged walls in counter-clockwise order, starting at the first wall of
// the contiguous run.
inline std::vector<int> kitchen_wall_run(const RoomLayout& layout) {
  const std::size_t n = layout.wall_count();
  require(layout.kitchen_walls.size() == n, "kitchen wall flags are not set");
  std::vector<int> flagged;
  for (std::size_t i = 0; i < n; ++i)
    if (layout.kitchen_walls[i]) flagged.push_back(static_cast<int>(i));
  if (flagged.empty()) throw ValidationError("no kitchen wall is flagged");
  if (flagged.size() > 3) throw ValidationError("more than three kitchen walls are flagged");
  if (flagged.size() == n) return flagged;
  std::vector<std::size_t> starts;
  for (int i : flagged)
    if (!layout.kitchen_walls[(static_cast<std::size_t>(i) + n - 1) % n]) starts.push_back(static_cast<std::size_t>(i));
  if (starts.size() != 1) throw ValidationError("kitchen walls are not contiguous");
  std::vector<int> run;
  for (std::size_t k = 0; k < flagged.size(); ++k) run.push_back(static_cast<int>((starts[0] + k) % n));
  return run;
}

// One wall: I; two walls sharing a corner: L; three walls with two corners: U.
inline LayoutType classify_layout(const RoomLayout& layout) {
  switch (kitchen_wall_run(layout).size()) {
    case 1: return LayoutType::I;
    case 2: return LayoutType::L;
    default: return LayoutType::U;
  }
}

// ---------------------------------------------------------------------------
// Components and placement
// ---------------------------------------------------------------------------

enum class ComponentCategory { refrigerator, cabinet, oven, sink, dishwasher, range, other };

inline std::string to_string(ComponentCategory c) {
  switch (c) {
    case ComponentCategory::refrigerator: return "Refrigerator";
    case ComponentCategory::cabinet: return "Cabinet";
    case ComponentCategory::oven: return "Oven";
    case ComponentCategory::sink: return "Sink";
    case ComponentCategory::dishwasher: return "Dishwasher";
    case ComponentCategory::range: return "Range";
    case ComponentCategory::other: return "Other";
  }
  return "Other";
}

inline ComponentCategory parse_category(const std::string& s) {
  for (auto c : {ComponentCategory::refrigerator, ComponentCategory::cabinet, ComponentCategory::oven,
                 ComponentCategory::sink, ComponentCategory::dishwasher, ComponentCategory::range,
                 ComponentCategory::other}) {
    std::string name = to_string(c);
    if (name == s) return c;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (name == s) return c;
  }
  throw ValidationError("unknown component category '" + s + "'");
}

// Local frame: width along +x centered on 0, back plane at y = 0 facing -y,
// body toward +y, bottom at z = 0. The anchor (back-bottom-center) is the
// origin of that frame, given in the source mesh's coordinates.
struct KitchenComponent {
  std::string name;
  ComponentCategory category = ComponentCategory::cabinet;
  double width_m = 0;
  double depth_m = 0;
  double height_m = 0;
  std::filesystem::path mesh_path;  // empty: procedural box geometry
  std::optional<Eigen::Vector3d> anchor;
  std::vector<std::string> material_slots{"body", "countertop", "handles"};
};

inline void validate_component(const KitchenComponent& c) {
  require(!c.name.empty(), "component needs a name");
  for (double d : {c.width_m, c.depth_m, c.height_m})
    require(std::isfinite(d) && d > 0, "component '" + c.name + "' dimensions must be positive");
}

// Rotation about z followed by a translation in the xy plane; width_scale
// stretches the local width axis before either.
struct PlacementTransform {
  double theta_z = 0;
  double t_x = 0;
  double t_y = 0;
  double width_scale = 1;
};

// Homogeneous 4x4 (column-vector convention): translate * rotate * scale.
inline Eigen::Matrix4d placement_matrix(const PlacementTransform& t) {
  const double c = std::cos(t.theta_z), s = std::sin(t.theta_z);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = c * t.width_scale;
  m(0, 1) = -s;
  m(1, 0) = s * t.width_scale;
  m(1, 1) = c;
  m(0, 3) = t.t_x;
  m(1, 3) = t.t_y;
  return m;
}

inline Eigen::Vector3d apply_transform(const PlacementTransform& t, const Eigen::Vector3d& p) {
  const double c = std::cos(t.theta_z), s = std::sin(t.theta_z);
  const double x = p.x() * t.width_scale;
  return {c * x - s * p.y() + t.t_x, s * x + c * p.y() + t.t_y, p.z()};
}

inline Mesh apply_transform(const Mesh& local, const PlacementTransform& t) {
  Mesh out = local;
  for (auto& p : out.positions) p = apply_transform(t, p);
  return out;
}

struct PlacementEntry {
  std::string component;       // library name
  std::size_t sequence_index = 0;
  int wall = 0;
  double offset_m = 0;         // start of the footprint along the wall
  double width_m = 0;          // nominal
  double effective_width_m = 0;
  double depth_m = 0;
  double height_m = 0;
  PlacementTransform transform;
};

struct PlacementPlan {
  LayoutType type = LayoutType::I;
  CornerPolicy policy = CornerPolicy::scale_last;
  std::vector<int> wall_run;
  std::vector<PlacementEntry> entries;
};

struct PlacementOptions {
  double min_width_scale = 0.5;
  double max_width_scale = 1.5;
  double fit_tolerance_m = 1e-9;
};

inline const KitchenComponent& find_component(std::span<const KitchenComponent> library, const std::string& name) {
  auto it = std::find_if(library.begin(), library.end(), [&](const KitchenComponent& c) { return c.name == name; });
  if (it == library.end()) throw ValidationError("unknown component '" + name + "' in sequence");
  return *it;
}

inline PlacementTransform wall_transform(const Wall& wall, double center_along, double width_scale) {
  PlacementTransform t;
  t.theta_z = std::atan2(wall.inward_normal.y(), wall.inward_normal.x()) - kPi / 2;
  if (t.theta_z <= -kPi) t.theta_z += kTwoPi;
  const Vec2 p = wall.start + center_along * wall.direction;
  t.t_x = p.x();
  t.t_y = p.y();
  t.width_scale = width_scale;
  return t;
}

// Lays components side by side along the flagged walls in sequence order.
// Each wall is filled greedily; when the next component no longer fits, the
// run continues on the next wall, starting past the depth of the component
// occupying the shared corner. Under scale_last the final component on each
// wall is stretched to end at the corner.
inline PlacementPlan place_components(const RoomLayout& layout, std::span<const KitchenComponent> library,
                                      std::span<const std::string> sequence, CornerPolicy policy,
                                      const PlacementOptions& opts = {}) {
  validate_layout(layout);
  if (sequence.empty()) throw ValidationError("component sequence is empty");
  PlacementPlan plan;
  plan.type = classify_layout(layout);
  plan.policy = policy;
  plan.wall_run = kitchen_wall_run(layout);

  std::size_t run_pos = 0;
  double cursor = 0;
  std::optional<std::size_t> last_on_wall;

  auto finish_wall = [&]() {
    if (policy != CornerPolicy::scale_last || !last_on_wall) return;
    PlacementEntry& e = plan.entries[*last_on_wall];
    const Wall wall = layout.wall(static_cast<std::size_t>(e.wall));
    const double scale = (wall.length - e.offset_m) / e.width_m;
    if (scale < opts.min_width_scale || scale > opts.max_width_scale) {
      throw ValidationError("component '" + e.component + "' would need width scale " + std::to_string(scale) +
                            " to reach the corner of wall " + std::to_string(e.wall) + " (allowed [" +
                            std::to_string(opts.min_width_scale) + ", " + std::to_string(opts.max_width_scale) + "])");
    }
    e.effective_width_m = wall.length - e.offset_m;
    e.transform = wall_transform(wall, e.offset_m + 0.5 * e.effective_width_m, scale);
  };

  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const KitchenComponent& comp = find_component(library, sequence[k]);
    validate_component(comp);
    for (;;) {
      const int wall_index = plan.wall_run[run_pos];
      const Wall wall = layout.wall(static_cast<std::size_t>(wall_index));
      if (cursor + comp.width_m <= wall.length + opts.fit_tolerance_m) {
        PlacementEntry e;
        e.component = comp.name;
        e.sequence_index = k;
        e.wall = wall_index;
        e.offset_m = cursor;
        e.width_m = comp.width_m;
        e.effective_width_m = comp.width_m;
        e.depth_m = comp.depth_m;
        e.height_m = comp.height_m;
        e.transform = wall_transform(wall, cursor + 0.5 * comp.width_m, 1.0);
        last_on_wall = plan.entries.size();
        plan.entries.push_back(e);
        cursor += comp.width_m;
        break;
      }
      if (!last_on_wall)
        throw ValidationError("overflow: component '" + comp.name + "' does not fit on wall " +
                              std::to_string(wall_index));
      if (run_pos + 1 == plan.wall_run.size())
        throw ValidationError("overflow: total component width exceeds the kitchen walls");
      finish_wall();
      cursor = plan.entries[*last_on_wall].depth_m;
      last_on_wall.reset();
      ++run_pos;
    }
  }
  finish_wall();
  return plan;
}

// Placement footprint corners (counter-clockwise) in plan coordinates.
inline std::array<Vec2, 4> footprint(const PlacementEntry& e) {
  const double half = 0.5 * e.width_m;
  std::array<Vec2, 4> out;
  const std::array<Eigen::Vector3d, 4> local{Eigen::Vector3d(-half, 0, 0), Eigen::Vector3d(half, 0, 0),
                                             Eigen::Vector3d(half, e.depth_m, 0), Eigen::Vector3d(-half, e.depth_m, 0)};
  for (std::size_t i = 0; i < 4; ++i) out[i] = apply_transform(e.transform, local[i]).head<2>();
  return out;
}

enum class ViolationKind { overlap, containment, not_flush };

inline std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::overlap: return "overlap";
    case ViolationKind::containment: return "containment";
    case ViolationKind::not_flush: return "not_flush";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::vector<std::size_t> entries;
  std::string detail;
};

struct PlanReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline PlanReport validate_plan(const PlacementPlan& plan, const RoomLayout& layout) {
  constexpr double kAreaTolerance = 1e-9;
  constexpr double kDistanceTolerance = 1e-9;
  PlanReport report;
  std::vector<std::array<Vec2, 4>> prints;
  for (const auto& e : plan.entries) prints.push_back(footprint(e));

  for (std::size_t i = 0; i < prints.size(); ++i) {
    for (std::size_t j = i + 1; j < prints.size(); ++j) {
      const double area = convex_overlap_area(prints[i], prints[j]);
      if (area >= kAreaTolerance)
        report.violations.push_back({ViolationKind::overlap, {i, j}, "footprint overlap " + std::to_string(area) + " m^2"});
    }
    for (const auto& c : prints[i]) {
      if (!point_in_polygon(c, layout.corners, kDistanceTolerance)) {
        report.violations.push_back({ViolationKind::containment, {i}, "footprint corner outside the floor polygon"});
        break;
      }
    }
    const auto& e = plan.entries[i];
    if (e.wall < 0 || static_cast<std::size_t>(e.wall) >= layout.wall_count()) {
      report.violations.push_back({ViolationKind::not_flush, {i}, "entry references a missing wall"});
      continue;
    }
    const Wall wall = layout.wall(static_cast<std::size_t>(e.wall));
    for (const auto& c : {prints[i][0], prints[i][1]}) {
      const double dist = std::abs((c - wall.start).dot(wall.inward_normal));
      if (dist >= kDistanceTolerance) {
        report.violations.push_back({ViolationKind::not_flush, {i}, "back face " + std::to_string(dist) + " m off the wall plane"});
        break;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Component geometry
// ---------------------------------------------------------------------------

// Box-built stand-in when a component ships without a mesh: a body, a
// countertop slab for base units, and a front handle strip.
inline Mesh procedural_component_mesh(const KitchenComponent& c) {
  validate_component(c);
  Mesh m;
  const double hw = 0.5 * c.width_m;
  const double handle_depth = std::min(0.02, 0.1 * c.depth_m);
  const double body_depth = c.depth_m - handle_depth;
  const bool counter = c.category != ComponentCategory::refrigerator && c.category != ComponentCategory::other;
  const double top = counter ? std::min(0.04, 0.2 * c.height_m) : 0.0;
  add_box(m, {-hw, 0, 0}, {hw, body_depth, c.height_m - top}, "body");
  if (counter) add_box(m, {-hw, 0, c.height_m - top}, {hw, c.depth_m, c.height_m}, "countertop");
  const double hz = counter ? c.height_m - top - 0.1 : 0.55 * c.height_m;
  add_box(m, {-0.25 * c.width_m, body_depth, hz - 0.02}, {0.25 * c.width_m, c.depth_m, hz}, "handles");
  return m;
}

// Mesh in the component's local frame (anchor at the origin).
inline Mesh component_local_mesh(const KitchenComponent& c) {
  if (c.mesh_path.empty()) return procedural_component_mesh(c);
  Mesh m = read_obj(c.mesh_path);
  validate_mesh(m);
  if (m.positions.empty()) throw IoError("component mesh " + c.mesh_path.string() + " has no vertices");
  const Bounds3 b = bounds(m);
  const Eigen::Vector3d anchor = c.anchor ? *c.anchor : Eigen::Vector3d(b.center().x(), b.min.y(), b.min.z());
  if (std::abs(anchor.y() - b.min.y()) > 1e-6)
    throw ValidationError("component '" + c.name + "' anchor is not on the bounding-box back plane");
  for (auto& p : m.positions) p -= anchor;
  return m;
}

inline Mesh apply_transform(const KitchenComponent& c, const PlacementTransform& t) {
  return apply_transform(component_local_mesh(c), t);
}

}  // namespace panostage
