// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/geometry2d.hpp"
#include "panostage/layout.hpp"
#include "panostage/mesh.hpp"
#include "panostage/parallel.hpp"
#include "panostage/projection.hpp"
#include "panostage/radiance.hpp"
#include "panostage/raytrace.hpp"
#include "panostage/rng.hpp"

namespace panostage {

struct Material {
  Rgbd albedo{0.5};  // diffuse, each channel in [0, 1]
  std::string texture;
  std::optional<double> specular;

  friend bool operator==(const Material&, const Material&) = default;
};

inline void validate_material(const Material& m, const std::string& slot) {
  for (double c : {m.albedo.r, m.albedo.g, m.albedo.b})
    require(std::isfinite(c) && c >= 0 && c <= 1, "material '" + slot + "': albedo channels must lie in [0, 1]");
  if (m.specular) require(std::isfinite(*m.specular) && *m.specular >= 0 && *m.specular <= 1,
                          "material '" + slot + "': specular weight must lie in [0, 1]");
}

inline std::map<std::string, Material> default_materials() {
  return {{"floor", {Rgbd(0.35, 0.3, 0.25), "", std::nullopt}},
          {"wall", {Rgbd(0.75), "", std::nullopt}},
          {"ceiling", {Rgbd(0.85), "", std::nullopt}},
          {"body", {Rgbd(0.8, 0.78, 0.72), "", std::nullopt}},
          {"countertop", {Rgbd(0.25), "", 0.2}},
          {"handles", {Rgbd(0.6), "", 0.5}},
          {"default", {Rgbd(0.5), "", std::nullopt}}};
}

enum class EmitterKind { point, area };

// RGB emitters. Point lights carry radiant power; area lights are one-sided
// rectangles centered at `position` spanning +-u and +-v, emitting
// `radiance` toward u x v.
struct Emitter {
  EmitterKind kind = EmitterKind::point;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Rgbd power{0};
  Rgbd radiance{0};
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v = Eigen::Vector3d::UnitY();
};

struct Environment {
  HdrPanorama map;
  double rotation_deg = 0;  // positive values shift sampling toward higher columns

  double column_offset() const { return rotation_deg / 360.0 * map.width(); }
  Rgbd radiance(const Eigen::Vector3d& dir) const { return sample_equirect(map.pixels(), dir, column_offset()); }
};

struct SceneObject {
  std::string name;
  std::string kind;       // "shell" or "component"
  std::string component;  // library name for components
  Mesh local_mesh;
  std::optional<PlacementTransform> placement;
  Mesh world_mesh;

  Eigen::Matrix4d transform() const { return placement ? placement_matrix(*placement) : Eigen::Matrix4d::Identity(); }
};

struct RoomExtent {
  std::vector<Vec2> corners;
  double height_m = 0;
};

struct SceneDescription {
  std::vector<SceneObject> objects;
  std::map<std::string, Material> materials;
  std::optional<Environment> environment;
  std::vector<Emitter> emitters;
  std::vector<WindowOpening> windows;
  std::optional<RoomExtent> room;
  Eigen::Vector3d camera = Eigen::Vector3d::Zero();

  std::size_t vertex_count() const {
    std::size_t n = 0;
    for (const auto& o : objects) n += o.world_mesh.vertex_count();
    return n;
  }

  const Material& material(const std::string& slot) const {
    if (auto it = materials.find(slot); it != materials.end()) return it->second;
    if (auto it = materials.find("default"); it != materials.end()) return it->second;
    static const Material fallback{};
    return fallback;
  }
};

// ---------------------------------------------------------------------------
// Room shell
// ---------------------------------------------------------------------------

// Ear clipping for a simple counter-clockwise polygon.
inline std::vector<std::array<std::uint32_t, 3>> triangulate_polygon(std::span<const Vec2> poly) {
  std::vector<std::uint32_t> idx(poly.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::vector<std::array<std::uint32_t, 3>> tris;
  auto is_ear = [&](std::size_t i) {
    const std::size_t n = idx.size();
    const Vec2& a = poly[idx[(i + n - 1) % n]];
    const Vec2& b = poly[idx[i]];
    const Vec2& c = poly[idx[(i + 1) % n]];
    if (cross2(b - a, c - b) <= 0) return false;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i || k == (i + 1) % n || k == (i + n - 1) % n) continue;
      const Vec2& p = poly[idx[k]];
      if (cross2(b - a, p - a) >= 0 && cross2(c - b, p - b) >= 0 && cross2(a - c, p - c) >= 0) return false;
    }
    return true;
  };
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (!is_ear(i)) continue;
      const std::size_t n = idx.size();
      tris.push_back({idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw NumericError("floor polygon triangulation failed");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

// Wall rectangle [0, L] x [0, H] minus its window openings, as a grid of
// quads sharing vertices. Faces point into the room.
inline Mesh wall_mesh(const RoomLayout& layout, std::size_t wall_index) {
  const Wall w = layout.wall(wall_index);
  std::vector<double> s_breaks{0.0, w.length}, z_breaks{0.0, layout.height_m};
  std::vector<WindowOpening> openings;
  for (const auto& win : layout.windows) {
    if (static_cast<std::size_t>(win.wall) != wall_index) continue;
    openings.push_back(win);
    s_breaks.insert(s_breaks.end(), {win.offset_m, std::min(w.length, win.offset_m + win.width_m)});
    z_breaks.insert(z_breaks.end(), {win.sill_m, std::min(layout.height_m, win.sill_m + win.height_m)});
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(s_breaks);
  uniq(z_breaks);
  Mesh m;
  const auto slot = m.slot_index("wall");
  const auto ns = static_cast<std::uint32_t>(s_breaks.size());
  for (double z : z_breaks)
    for (double s : s_breaks) {
      const Vec2 p = w.start + s * w.direction;
      m.positions.emplace_back(p.x(), p.y(), z);
    }
  auto vid = [&](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * ns + i); };
  for (std::size_t j = 0; j + 1 < z_breaks.size(); ++j) {
    for (std::size_t i = 0; i + 1 < s_breaks.size(); ++i) {
      const double sc = 0.5 * (s_breaks[i] + s_breaks[i + 1]);
      const double zc = 0.5 * (z_breaks[j] + z_breaks[j + 1]);
      const bool open = std::any_of(openings.begin(), openings.end(), [&](const WindowOpening& o) {
        return sc > o.offset_m && sc < o.offset_m + o.width_m && zc > o.sill_m && zc < o.sill_m + o.height_m;
      });
      if (open) continue;
      const auto a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      m.triangles.push_back({a, d, c});
      m.triangles.push_back({a, c, b});
      m.face_slots.insert(m.face_slots.end(), {slot, slot});
    }
  }
  return m;
}

inline Mesh horizontal_mesh(const RoomLayout& layout, double z, bool facing_up, const std::string& slot_name) {
  Mesh m;
  const auto slot = m.slot_index(slot_name);
  for (const auto& c : layout.corners) m.positions.emplace_back(c.x(), c.y(), z);
  for (auto t : triangulate_polygon(layout.corners)) {
    if (!facing_up) std::swap(t[1], t[2]);
    m.triangles.push_back(t);
    m.face_slots.push_back(slot);
  }
  return m;
}

inline std::vector<SceneObject> room_shell(const RoomLayout& layout) {
  std::vector<SceneObject> shell;
  auto add = [&](std::string name, Mesh mesh) {
    SceneObject o{std::move(name), "shell", "", mesh, std::nullopt, mesh};
    shell.push_back(std::move(o));
  };
  add("floor", horizontal_mesh(layout, 0.0, true, "floor"));
  add("ceiling", horizontal_mesh(layout, layout.height_m, false, "ceiling"));
  for (std::size_t i = 0; i < layout.wall_count(); ++i) add("wall_" + std::to_string(i), wall_mesh(layout, i));
  return shell;
}

struct AssembleOptions {
  double env_rotation_deg = 0;  // typically the record's room orientation
};

inline SceneDescription assemble_scene(const RoomLayout& layout, const PlacementPlan& plan,
                                       std::span<const KitchenComponent> library, const HdrPanorama& env,
                                       const std::map<std::string, Material>& materials,
                                       std::span<const Emitter> emitters, const AssembleOptions& opts = {}) {
  validate_layout(layout);
  if (!env.calibrated()) throw ValidationError("environment map must be photometrically calibrated");
  const PlanReport report = validate_plan(plan, layout);
  if (!report.ok()) {
    std::string msg = "placement plan is invalid:";
    for (const auto& v : report.violations) msg += " [" + to_string(v.kind) + ": " + v.detail + "]";
    throw ValidationError(msg);
  }
  require(std::isfinite(opts.env_rotation_deg), "environment rotation must be finite");

  SceneDescription scene;
  scene.objects = room_shell(layout);
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& e = plan.entries[i];
    SceneObject o;
    o.name = "component_" + std::to_string(i) + "_" + e.component;
    o.kind = "component";
    o.component = e.component;
    o.local_mesh = component_local_mesh(find_component(library, e.component));
    o.placement = e.transform;
    o.world_mesh = apply_transform(o.local_mesh, e.transform);
    scene.objects.push_back(std::move(o));
  }
  scene.materials = default_materials();
  for (const auto& [slot, m] : materials) {
    validate_material(m, slot);
    scene.materials[slot] = m;
  }
  scene.environment = Environment{env, opts.env_rotation_deg};
  scene.emitters.assign(emitters.begin(), emitters.end());
  scene.windows = layout.windows;
  scene.room = RoomExtent{layout.corners, layout.height_m};
  const Vec2 cam = layout.camera_position();
  scene.camera = Eigen::Vector3d(cam.x(), cam.y(), layout.camera_height_m);
  return scene;
}

// ---------------------------------------------------------------------------
// Direct-lighting estimators
// ---------------------------------------------------------------------------

// Ray-traceable snapshot of a scene. Surface triangles carry their albedo;
// area emitters become emissive triangles.
class SceneTracer {
 public:
  explicit SceneTracer(const SceneDescription& scene) : scene_(&scene) {
    std::vector<Triangle> tris;
    for (const auto& obj : scene.objects) {
      const Mesh& m = obj.world_mesh;
      for (std::size_t f = 0; f < m.triangles.size(); ++f) {
        const auto& t = m.triangles[f];
        const Eigen::Vector3d& a = m.positions[t[0]];
        surfaces_.push_back({scene.material(m.face_slot_name(f)).albedo, Rgbd(0), Eigen::Vector3d::Zero(), false});
        tris.push_back({a, m.positions[t[1]] - a, m.positions[t[2]] - a, static_cast<std::uint32_t>(surfaces_.size() - 1)});
      }
    }
    for (const auto& e : scene.emitters) {
      if (e.kind != EmitterKind::area) continue;
      const Eigen::Vector3d n = e.u.cross(e.v).normalized();
      surfaces_.push_back({Rgbd(0), e.radiance, n, true});
      const auto tag = static_cast<std::uint32_t>(surfaces_.size() - 1);
      const Eigen::Vector3d c0 = e.position - e.u - e.v;
      tris.push_back({c0, 2 * e.u, 2 * e.u + 2 * e.v, tag});
      tris.push_back({c0, 2 * e.u + 2 * e.v, 2 * e.v, tag});
    }
    bvh_ = Bvh(std::move(tris));
  }

  const SceneDescription& scene() const { return *scene_; }

  Rgbd environment(const Eigen::Vector3d& dir) const {
    return scene_->environment ? scene_->environment->radiance(dir) : Rgbd(0);
  }

  struct SurfaceHit {
    Eigen::Vector3d point;
    Eigen::Vector3d normal;  // faces the incoming ray
    Rgbd albedo;
    Rgbd emitted;
    bool emitter = false;
  };

  std::optional<SurfaceHit> trace(const Ray& ray) const {
    auto hit = bvh_.closest(ray);
    if (!hit) return std::nullopt;
    const Surface& s = surfaces_[bvh_.triangles()[hit->triangle].tag];
    SurfaceHit out;
    out.point = ray.origin + hit->t * ray.dir;
    out.normal = hit->normal.dot(ray.dir) > 0 ? Eigen::Vector3d(-hit->normal) : hit->normal;
    out.albedo = s.albedo;
    out.emitter = s.emitter;
    out.emitted = (s.emitter && s.emitter_normal.dot(ray.dir) < 0) ? s.radiance : Rgbd(0);
    return out;
  }

  bool visible(const Eigen::Vector3d& from, const Eigen::Vector3d& to) const {
    const Eigen::Vector3d d = to - from;
    const double dist = d.norm();
    Ray r{from, d / dist, 1e-7, dist * (1 - 1e-9)};
    return !bvh_.occluded(r);
  }

  // Irradiance from point emitters at `p` with normal `n`.
  Rgbd point_light_irradiance(const Eigen::Vector3d& p, const Eigen::Vector3d& n) const {
    Rgbd e(0);
    for (const auto& em : scene_->emitters) {
      if (em.kind != EmitterKind::point) continue;
      const Eigen::Vector3d d = em.position - p;
      const double dist2 = d.squaredNorm();
      const double cos = n.dot(d) / std::sqrt(dist2);
      if (cos <= 0 || !visible(p + 1e-7 * n, em.position)) continue;
      e += em.power * (cos / (4 * kPi * dist2));
    }
    return e;
  }

  // One-sample estimate of the radiance leaving a surface toward the viewer:
  // albedo/pi times the directly received irradiance (environment through
  // openings, emitters), with the hemisphere integral estimated by a single
  // cosine-distributed ray driven by (u1, u2).
  Rgbd outgoing_radiance(const SurfaceHit& hit, double u1, double u2) const {
    if (hit.emitter) return hit.emitted;
    const Eigen::Vector3d origin = hit.point + 1e-7 * hit.normal;
    const Eigen::Vector3d dir = cosine_hemisphere(hit.normal, u1, u2);
    Rgbd irradiance(0);
    const auto second = trace(Ray{origin, dir, 1e-7});
    if (!second) irradiance = environment(dir) * kPi;
    else if (second->emitter) irradiance = second->emitted * kPi;
    irradiance += point_light_irradiance(origin, hit.normal);
    return hit.albedo * irradiance * (1.0 / kPi);
  }

 private:
  struct Surface {
    Rgbd albedo;
    Rgbd radiance;
    Eigen::Vector3d emitter_normal;
    bool emitter;
  };

  const SceneDescription* scene_;
  std::vector<Surface> surfaces_;
  Bvh bvh_;
};

struct IrradianceProbe {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  int sample_count = 256;
  std::uint64_t seed = 0;
  std::uint64_t probe_id = 0;
};

struct ProbeResult {
  double illuminance_lux = 0;
  double standard_error_lux = 0;
  Rgbd irradiance{0};  // radiometric RGB
};

inline void validate_probe(const SceneDescription& scene, const IrradianceProbe& p) {
  if (p.sample_count <= 0) throw ValidationError("irradiance probe needs a positive sample count");
  require(p.sample_count >= 64, "irradiance probe needs at least 64 samples");
  require(p.position.allFinite() && p.normal.allFinite(), "probe position and normal must be finite");
  require(std::abs(p.normal.norm() - 1.0) <= 1e-9, "probe normal must be unit length");
  if (scene.room) {
    const bool inside = point_in_polygon(p.position.head<2>(), scene.room->corners) && p.position.z() >= 0 &&
                        p.position.z() <= scene.room->height_m;
    if (!inside) throw ValidationError("probe position lies outside the room");
  }
}

namespace detail {

inline ProbeResult estimate_irradiance(const SceneTracer& tracer, const Eigen::Vector3d& position,
                                       const Eigen::Vector3d& normal, int samples, const RandomStream& rng) {
  const auto [nx, ny] = strata_grid(samples);
  Rgbd sum(0);
  double lum_sum = 0, lum_sq = 0;
  for (int i = 0; i < samples; ++i) {
    const auto u = rng.uniforms(static_cast<std::uint32_t>(i));
    const double u1 = ((i % nx) + u[0]) / nx;
    const double u2 = ((i / nx) + u[1]) / ny;
    const Eigen::Vector3d dir = cosine_hemisphere(normal, u1, u2);
    const auto hit = tracer.trace(Ray{position, dir, 1e-7});
    const Rgbd radiance = hit ? tracer.outgoing_radiance(*hit, u[2], u[3]) : tracer.environment(dir);
    const double value = kPi * luminance(radiance);
    sum += radiance;
    lum_sum += value;
    lum_sq += value * value;
  }
  const double n = samples;
  ProbeResult r;
  r.irradiance = sum * (kPi / n);
  const double mean = lum_sum / n;
  const double var = std::max(0.0, (lum_sq - n * mean * mean) / (n - 1));
  r.standard_error_lux = std::sqrt(var / n);
  const Rgbd direct = tracer.point_light_irradiance(position, normal);
  r.irradiance += direct;
  r.illuminance_lux = mean + luminance(direct);
  return r;
}

}  // namespace detail

// Cosine-weighted Monte Carlo estimate of the irradiance at a point:
// E = pi * mean radiance over cosine-distributed directions, plus the
// closed-form contribution of point emitters.
inline ProbeResult irradiance_probe(const SceneTracer& tracer, const IrradianceProbe& p) {
  validate_probe(tracer.scene(), p);
  return detail::estimate_irradiance(tracer, p.position, p.normal, p.sample_count, RandomStream(p.seed, p.probe_id));
}

inline ProbeResult irradiance_probe(const SceneDescription& scene, const IrradianceProbe& p) {
  validate_probe(scene, p);
  return irradiance_probe(SceneTracer(scene), p);
}

struct PreviewOptions {
  int samples_per_pixel = 16;
  std::uint64_t seed = 0;
  std::optional<Eigen::Vector3d> camera;  // defaults to the scene camera
};

// Stream ids for preview pixels live above this offset, away from probe ids.
inline constexpr std::uint64_t kPreviewStreamBase = 1ull << 40;

// Pinhole preview: each pixel casts one ray through its center. Surfaces
// show albedo/pi times an irradiance estimate at the hit point; rays that
// leave the room show the environment.
inline RgbImage preview_render(const SceneDescription& scene, const PerspectiveView& view, const PreviewOptions& opts) {
  require(opts.samples_per_pixel >= 1, "samples per pixel must be positive");
  const ViewBasis basis = view_basis(view);
  const SceneTracer tracer(scene);
  const Eigen::Vector3d eye = opts.camera ? *opts.camera : scene.camera;
  RgbImage out(view.width, view.height);
  parallel_for(view.height, [&](int y) {
    for (int x = 0; x < view.width; ++x) {
      const Eigen::Vector3d dir = view_ray(basis, view, x, y);
      const auto hit = tracer.trace(Ray{eye, dir, 1e-9});
      Rgbd c(0);
      if (!hit) {
        c = tracer.environment(dir);
      } else if (hit->emitter) {
        c = hit->emitted;
      } else {
        const auto id = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(view.width) + static_cast<std::uint64_t>(x);
        const Eigen::Vector3d origin = hit->point + 1e-7 * hit->normal;
        const ProbeResult e = detail::estimate_irradiance(tracer, origin, hit->normal, opts.samples_per_pixel,
                                                          RandomStream(opts.seed, kPreviewStreamBase + id));
        c = hit->albedo * e.irradiance * (1.0 / kPi);
      }
      out(x, y) = Rgb(c);
    }
  });
  return out;
}

}  // namespace panostage
