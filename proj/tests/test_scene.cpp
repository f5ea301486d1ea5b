// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "panostage/scene.hpp"
#include "panostage/scene_io.hpp"
#include "support.hpp"

namespace panostage {
namespace {

using testing::example_library;
using testing::example_sequence;
using testing::gray_for_luminance;
using testing::rectangle_room;
using testing::SmoothField;
using testing::TempDir;
using testing::uniform_panorama;

constexpr double kSkyLuminance = 100;

// Luminance actually stored for a gray pixel of nominal luminance `cdm2`.
double stored_luminance(double cdm2) { return luminance(gray_for_luminance(cdm2)); }

SceneDescription open_sky(double cdm2 = kSkyLuminance) {
  SceneDescription s;
  s.environment = Environment{uniform_panorama(32, cdm2, 1.0), 0};
  s.materials = default_materials();
  s.materials["black"] = Material{Rgbd(0), "", std::nullopt};
  return s;
}

void add_object(SceneDescription& s, const std::string& name, Mesh mesh) {
  s.objects.push_back(SceneObject{name, "shell", "", mesh, std::nullopt, mesh});
}

Mesh box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const std::string& slot) {
  Mesh m;
  add_box(m, lo, hi, slot);
  return m;
}

RoomLayout kitchen_room() {
  RoomLayout l = rectangle_room(4.0, 3.0, 2.5);
  l.kitchen_walls = {true, false, false, false};
  l.windows.push_back({2, 1.0, 1.5, 0.9, 1.2});
  return l;
}

SceneDescription kitchen_scene(const HdrPanorama& env, double rotation = 0) {
  const RoomLayout room = kitchen_room();
  const auto lib = example_library();
  const auto plan = place_components(room, lib, example_sequence(), CornerPolicy::scale_last);
  return assemble_scene(room, plan, lib, env, {}, {}, {rotation});
}

TEST(Assemble, ShellOnlyForEmptyPlan) {
  const RoomLayout room = kitchen_room();
  PlacementPlan plan;
  const auto scene = assemble_scene(room, plan, example_library(), uniform_panorama(16, 10, 1.0), {}, {});
  ASSERT_EQ(scene.objects.size(), 2 + room.wall_count());
  for (const auto& o : scene.objects) EXPECT_EQ(o.kind, "shell");
  EXPECT_EQ(scene.objects[0].name, "floor");
  EXPECT_EQ(scene.objects[1].name, "ceiling");
  EXPECT_EQ(scene.camera, Eigen::Vector3d(2.0, 1.5, 1.6));
}

TEST(Assemble, VertexConservation) {
  const RoomLayout room = kitchen_room();
  const auto lib = example_library();
  const auto plan = place_components(room, lib, example_sequence(), CornerPolicy::scale_last);
  const auto scene = assemble_scene(room, plan, lib, uniform_panorama(16, 10, 1.0), {}, {});
  std::size_t expected = 0;
  for (const auto& o : room_shell(room)) expected += o.world_mesh.vertex_count();
  for (const auto& e : plan.entries) expected += component_local_mesh(find_component(lib, e.component)).vertex_count();
  EXPECT_EQ(scene.vertex_count(), expected);
  ASSERT_EQ(scene.objects.size(), 2 + room.wall_count() + plan.entries.size());
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& o = scene.objects[2 + room.wall_count() + i];
    EXPECT_EQ(o.name, "component_" + std::to_string(i) + "_" + plan.entries[i].component);
    EXPECT_EQ(o.world_mesh, apply_transform(o.local_mesh, plan.entries[i].transform));
  }
}

TEST(Assemble, Errors) {
  const RoomLayout room = kitchen_room();
  const auto lib = example_library();
  const auto plan = place_components(room, lib, example_sequence(), CornerPolicy::scale_last);
  EXPECT_THROW(assemble_scene(room, plan, lib, uniform_panorama(16, 10), {}, {}), ValidationError);
  auto broken = plan;
  broken.entries[1].transform = broken.entries[0].transform;
  EXPECT_THROW(assemble_scene(room, broken, lib, uniform_panorama(16, 10, 1.0), {}, {}), ValidationError);
  const std::map<std::string, Material> bright{{"body", Material{Rgbd(1.2, 0.5, 0.5), "", std::nullopt}}};
  EXPECT_THROW(assemble_scene(room, plan, lib, uniform_panorama(16, 10, 1.0), bright, {}), ValidationError);
}

TEST(Shell, WindowLeavesHole) {
  const RoomLayout room = kitchen_room();
  const Mesh wall = wall_mesh(room, 2);
  // Area oracle: wall rectangle minus the opening.
  double area = 0;
  for (const auto& t : wall.triangles)
    area += 0.5 * (wall.positions[t[1]] - wall.positions[t[0]]).cross(wall.positions[t[2]] - wall.positions[t[0]]).norm();
  EXPECT_NEAR(area, 4.0 * 2.5 - 1.5 * 1.2, 1e-12);

  SceneDescription s;
  add_object(s, "wall", wall);
  const SceneTracer tracer(s);
  // Wall 2 runs from (4, 3) to (0, 3); the window spans x in [1.5, 3.0].
  const Eigen::Vector3d from(2.0, 1.5, 1.6);
  EXPECT_FALSE(tracer.trace(Ray{from, (Eigen::Vector3d(2.25, 3.0, 1.5) - from).normalized()}).has_value());
  EXPECT_TRUE(tracer.trace(Ray{from, (Eigen::Vector3d(0.5, 3.0, 1.5) - from).normalized()}).has_value());
  EXPECT_TRUE(tracer.trace(Ray{from, (Eigen::Vector3d(2.25, 3.0, 0.5) - from).normalized()}).has_value());
}

TEST(Shell, TriangulationCoversPolygon) {
  const std::vector<Vec2> poly{{0, 0}, {4, 0}, {4, 3}, {2, 1.5}, {0, 3}};
  const auto tris = triangulate_polygon(poly);
  ASSERT_EQ(tris.size(), poly.size() - 2);
  double area = 0;
  for (const auto& t : tris) {
    const double a = 0.5 * cross2(poly[t[1]] - poly[t[0]], poly[t[2]] - poly[t[0]]);
    EXPECT_GT(a, 0);
    area += a;
  }
  EXPECT_NEAR(area, signed_area(poly), 1e-12);
}

TEST(Environment, QuarterTurnIsQuarterWidthShift) {
  std::mt19937_64 rng(5);
  const SmoothField f = SmoothField::random(rng);
  const RgbImage img = testing::panorama_from(64, [&](const Eigen::Vector3d& d) { return Rgb(static_cast<float>(f(d))); });
  const Environment rotated{HdrPanorama(img, 1.0), 90};
  RgbImage shifted(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) shifted(x, y) = img((x + img.width() / 4) % img.width(), y);
  const Environment plain{HdrPanorama(shifted, 1.0), 0};
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d d = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    EXPECT_NEAR(rotated.radiance(d).r, plain.radiance(d).r, 1e-6);
  }
}

TEST(Probe, FurnaceOverFiftySeeds) {
  const SceneDescription s = open_sky();
  const SceneTracer tracer(s);
  const double target = kPi * stored_luminance(kSkyLuminance);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = irradiance_probe(tracer, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 256, seed, 0});
    EXPECT_LE(std::abs(r.illuminance_lux - target), std::max(3 * r.standard_error_lux, 1e-12 * target));
  }
  EXPECT_NEAR(target, 100 * kPi, 1e-6 * 100 * kPi);
}

TEST(Probe, FurnaceAnyNormal) {
  const SceneDescription s = open_sky();
  const SceneTracer tracer(s);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d n = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    const auto r = irradiance_probe(tracer, {Eigen::Vector3d::Zero(), n, 64, 1, static_cast<std::uint64_t>(i)});
    EXPECT_NEAR(r.illuminance_lux, kPi * stored_luminance(kSkyLuminance), 1e-9);
  }
}

TEST(Probe, HalfOccluder) {
  SceneDescription s = open_sky();
  const double big = 1e4;
  add_object(s, "occluder", box({-big, -big, -big}, {big, 0, big}, "black"));
  const SceneTracer tracer(s);
  const double target = kPi * stored_luminance(kSkyLuminance) / 2;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = irradiance_probe(tracer, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1024, seed, 3});
    EXPECT_GT(r.standard_error_lux, 0);
    EXPECT_LE(std::abs(r.illuminance_lux - target), 3 * r.standard_error_lux) << seed;
  }
}

TEST(Probe, EnclosedIsDark) {
  SceneDescription s = open_sky();
  add_object(s, "shut", box({-1, -1, -1}, {1, 1, 1}, "black"));
  const auto r = irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 256, 0, 0});
  EXPECT_EQ(r.illuminance_lux, 0);
  EXPECT_EQ(r.standard_error_lux, 0);
}

// Cosine-weighted integral of the smooth field over the upper hemisphere.
double smooth_field_irradiance(const SmoothField& f) {
  return f.c0 * kPi + f.cz * 2 * kPi / 3 + f.cz2 * (kPi / 2 - kPi / 3);
}

TEST(Probe, MatchesAnalyticIrradiance) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const SmoothField f = SmoothField::random(rng);
    const double unit = stored_luminance(100);  // luminance of field value 1
    const RgbImage img = testing::panorama_from(256, [&](const Eigen::Vector3d& d) { return gray_for_luminance(100 * f(d)); });
    SceneDescription s;
    s.environment = Environment{HdrPanorama(img, 1.0), 0};
    const auto r = irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1 << 16, 4, 0});
    const double oracle = unit * smooth_field_irradiance(f);
    EXPECT_LE(std::abs(r.illuminance_lux - oracle), 3 * r.standard_error_lux + 2e-3 * oracle);
  }
}

TEST(Probe, StandardErrorSlope) {
  std::mt19937_64 rng(2);
  const SmoothField f = SmoothField::random(rng);
  const RgbImage img = testing::panorama_from(64, [&](const Eigen::Vector3d& d) { return gray_for_luminance(100 * f(d)); });
  SceneDescription s;
  s.environment = Environment{HdrPanorama(img, 1.0), 0};
  const SceneTracer tracer(s);
  std::vector<double> xs, ys;
  for (int k = 6; k <= 16; ++k) {
    const auto r = irradiance_probe(tracer, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1 << k, 8, 0});
    xs.push_back(std::log(static_cast<double>(1 << k)));
    ys.push_back(std::log(r.standard_error_lux));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.05);
}

TEST(Probe, PointLightInverseSquare) {
  SceneDescription s;
  Emitter e;
  e.position = Eigen::Vector3d(0, 0, 2);
  e.power = Rgbd(40);
  s.emitters.push_back(e);
  const auto r = irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 64, 0, 0});
  EXPECT_NEAR(r.illuminance_lux, luminance(Rgbd(40)) / (4 * kPi * 4), 1e-9);
  // Tilted normal picks up the cosine.
  const Eigen::Vector3d n = Eigen::Vector3d(1, 0, 1).normalized();
  const auto t = irradiance_probe(s, {Eigen::Vector3d::Zero(), n, 64, 0, 0});
  EXPECT_NEAR(t.illuminance_lux, luminance(Rgbd(40)) * std::sqrt(0.5) / (4 * kPi * 4), 1e-9);
  // Blocked by a box in between.
  add_object(s, "blocker", box({-0.5, -0.5, 0.9}, {0.5, 0.5, 1.1}, "default"));
  EXPECT_EQ(irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 64, 0, 0}).illuminance_lux, 0);
}

TEST(Probe, AreaEmitterPlane) {
  SceneDescription s;
  Emitter e;
  e.kind = EmitterKind::area;
  e.position = Eigen::Vector3d(0, 0, 1);
  e.u = Eigen::Vector3d(1e4, 0, 0);
  e.v = Eigen::Vector3d(0, -1e4, 0);  // u x v points down
  e.radiance = Rgbd(0.5);
  s.emitters.push_back(e);
  const auto r = irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1024, 0, 0});
  EXPECT_NEAR(r.illuminance_lux, kPi * luminance(Rgbd(0.5)), 1e-3);
  // One-sided: flipped emitter sends nothing to the probe.
  s.emitters[0].v = Eigen::Vector3d(0, 1e4, 0);
  EXPECT_NEAR(irradiance_probe(s, {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(), 1024, 0, 0}).illuminance_lux, 0, 1e-12);
}

TEST(Probe, Errors) {
  const auto scene = kitchen_scene(uniform_panorama(16, 10, 1.0));
  const Eigen::Vector3d inside(2, 1.5, 1);
  EXPECT_THROW(irradiance_probe(scene, {inside, Eigen::Vector3d::UnitZ(), 0, 0, 0}), ValidationError);
  EXPECT_THROW(irradiance_probe(scene, {inside, Eigen::Vector3d::UnitZ(), 63, 0, 0}), ValidationError);
  EXPECT_THROW(irradiance_probe(scene, {inside, Eigen::Vector3d(0, 0, 1.1), 64, 0, 0}), ValidationError);
  EXPECT_THROW(irradiance_probe(scene, {Eigen::Vector3d(5, 1, 1), Eigen::Vector3d::UnitZ(), 64, 0, 0}), ValidationError);
  EXPECT_THROW(irradiance_probe(scene, {Eigen::Vector3d(2, 1, 3), Eigen::Vector3d::UnitZ(), 64, 0, 0}), ValidationError);
  EXPECT_NO_THROW(irradiance_probe(scene, {inside, Eigen::Vector3d::UnitZ(), 64, 0, 0}));
}

TEST(Probe, Deterministic) {
  const auto scene = kitchen_scene(uniform_panorama(16, 1000, 1.0));
  const SceneTracer tracer(scene);
  const IrradianceProbe p{Eigen::Vector3d(2, 2.5, 1.0), Eigen::Vector3d::UnitZ(), 256, 42, 7};
  const auto a = irradiance_probe(tracer, p);
  const auto b = irradiance_probe(tracer, p);
  EXPECT_EQ(a.illuminance_lux, b.illuminance_lux);
  EXPECT_EQ(a.standard_error_lux, b.standard_error_lux);
  EXPECT_GT(a.illuminance_lux, 0);
  auto q = p;
  q.probe_id = 8;
  EXPECT_NE(irradiance_probe(tracer, q).illuminance_lux, a.illuminance_lux);
}

TEST(Preview, EnvironmentOnlyMatchesPerspectiveExtraction) {
  std::mt19937_64 rng(13);
  const SmoothField f = SmoothField::random(rng);
  const RgbImage img = testing::panorama_from(64, [&](const Eigen::Vector3d& d) { return Rgb(static_cast<float>(f(d))); });
  SceneDescription s;
  s.environment = Environment{HdrPanorama(img, 1.0), 0};
  const PerspectiveView view{75, 30, 10, 48, 32};
  EXPECT_EQ(preview_render(s, view, {}), pano_to_perspective(img, view));
}

TEST(Preview, WhiteFloorUnderUniformSky) {
  SceneDescription s = open_sky(50);
  s.materials["floor"] = Material{Rgbd(1), "", std::nullopt};
  RoomLayout ground = rectangle_room(1e3, 1e3);
  for (auto& c : ground.corners) c -= Vec2(500, 500);
  add_object(s, "floor", horizontal_mesh(ground, 0.0, true, "floor"));
  PreviewOptions opts;
  opts.camera = Eigen::Vector3d(0, 0, 1.6);
  const auto img = preview_render(s, {60, 0, -60, 16, 16}, opts);
  const double expected = gray_for_luminance(50).r;
  for (const auto& p : img.pixels()) {
    EXPECT_NEAR(p.r, expected, 1e-6 * expected);
    EXPECT_NEAR(p.g, expected, 1e-6 * expected);
  }
}

TEST(Preview, LinearInEnvironment) {
  std::mt19937_64 rng(17);
  const SmoothField f = SmoothField::random(rng);
  const RgbImage img = testing::panorama_from(32, [&](const Eigen::Vector3d& d) { return gray_for_luminance(500 * f(d)); });
  RgbImage doubled = img;
  for (auto& p : doubled.pixels()) p = Rgb(2 * p.r, 2 * p.g, 2 * p.b);
  const PerspectiveView view{90, 90, 0, 24, 16};
  const PreviewOptions opts{4, 3, std::nullopt};
  const auto a = preview_render(kitchen_scene(HdrPanorama(img, 1.0)), view, opts);
  const auto b = preview_render(kitchen_scene(HdrPanorama(doubled, 1.0)), view, opts);
  double total = 0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    EXPECT_NEAR(b.pixels()[i].r, 2 * a.pixels()[i].r, 1e-6 * (1 + a.pixels()[i].r));
    total += a.pixels()[i].r;
  }
  EXPECT_GT(total, 0);
}

TEST(Preview, DeterministicPerSeed) {
  const auto scene = kitchen_scene(uniform_panorama(16, 2000, 1.0));
  const PerspectiveView view{90, 90, -10, 20, 12};
  const PreviewOptions opts{4, 11, std::nullopt};
  const auto a = preview_render(scene, view, opts);
  EXPECT_EQ(a, preview_render(scene, view, opts));
  EXPECT_NE(a, preview_render(scene, view, {4, 12, std::nullopt}));
}

TEST(SceneIo, ExportImportRoundTrip) {
  std::mt19937_64 rng(19);
  const SmoothField f = SmoothField::random(rng);
  const RgbImage img = testing::panorama_from(32, [&](const Eigen::Vector3d& d) { return gray_for_luminance(321.5 * f(d)); });
  SceneDescription scene = kitchen_scene(HdrPanorama(img, 0.73), 37.5);
  Emitter point;
  point.position = Eigen::Vector3d(2, 1.5, 2.4);
  point.power = Rgbd(60, 55, 50);
  Emitter area;
  area.kind = EmitterKind::area;
  area.position = Eigen::Vector3d(2, 1.5, 2.49);
  area.u = Eigen::Vector3d(0.3, 0, 0);
  area.v = Eigen::Vector3d(0, -0.3, 0);
  area.radiance = Rgbd(3);
  scene.emitters = {point, area};
  scene.materials["countertop"].texture = "granite.png";

  TempDir dir("scene");
  export_scene(scene, dir.path());
  const SceneDescription back = import_scene(dir.path());
  const SceneComparison cmp = compare_scenes(scene, back);
  for (const auto& d : cmp.differences) ADD_FAILURE() << d;
  EXPECT_TRUE(cmp.clean(1e-9)) << cmp.max_vertex_difference_m;
  // Environment pixels survive bit for bit.
  EXPECT_EQ(back.environment->map, scene.environment->map);

  const json j = json::parse(read_text(dir / "scene.json"));
  EXPECT_EQ(j["schema_version"], kSceneSchemaVersion);
  for (const auto& o : j["objects"]) {
    const Eigen::Matrix4d m = matrix_from_json(o["transform"]);
    if (o["kind"] == "shell") {
      EXPECT_EQ(m, Eigen::Matrix4d::Identity());
      EXPECT_FALSE(o.contains("placement"));
    } else {
      EXPECT_TRUE(o.contains("placement"));
    }
    EXPECT_TRUE(fs::exists(dir.path() / o["mesh"].get<std::string>()));
  }
}

TEST(SceneIo, CompareDetectsDifferences) {
  const auto a = kitchen_scene(uniform_panorama(16, 10, 1.0));
  auto b = a;
  EXPECT_TRUE(compare_scenes(a, b).clean());
  b.objects.back().world_mesh.positions[0].x() += 1e-6;
  EXPECT_FALSE(compare_scenes(a, b).clean());
  auto c = a;
  c.materials["wall"].albedo = Rgbd(0.1);
  EXPECT_FALSE(compare_scenes(a, c).clean());
}

TEST(SceneIo, RejectsUnknownKeysAndVersions) {
  const auto scene = kitchen_scene(uniform_panorama(16, 10, 1.0));
  TempDir dir("scene-bad");
  export_scene(scene, dir.path());
  json j = json::parse(read_text(dir / "scene.json"));
  j["schema_version"] = 99;
  write_text(dir / "scene.json", j.dump());
  EXPECT_THROW(import_scene(dir.path()), ValidationError);
  j["schema_version"] = kSceneSchemaVersion;
  j["extra"] = true;
  write_text(dir / "scene.json", j.dump());
  EXPECT_THROW(import_scene(dir.path()), ValidationError);
  EXPECT_THROW(import_scene(dir / "missing"), IoError);
}

TEST(Materials, Validation) {
  EXPECT_NO_THROW(validate_material(Material{Rgbd(1), "", 1.0}, "x"));
  EXPECT_THROW(validate_material(Material{Rgbd(1.2, 0, 0), "", std::nullopt}, "x"), ValidationError);
  EXPECT_THROW(validate_material(Material{Rgbd(-0.1), "", std::nullopt}, "x"), ValidationError);
  EXPECT_THROW(validate_material(Material{Rgbd(0.5), "", 2.0}, "x"), ValidationError);
  const json j = material_to_json(Material{Rgbd(0.1, 0.2, 0.3), "t.png", 0.4});
  EXPECT_EQ(material_from_json(j, "x"), (Material{Rgbd(0.1, 0.2, 0.3), "t.png", 0.4}));
}

}  // namespace
}  // namespace panostage
