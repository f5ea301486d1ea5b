// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the test executables.
#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "panostage/image.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout.hpp"
#include "panostage/layout_io.hpp"
#include "panostage/projection.hpp"
#include "panostage/radiance.hpp"

namespace panostage::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("panostage-" + tag + "-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Radiometric RGB value whose luminance is `cdm2`.
inline Rgb gray_for_luminance(double cdm2) { return Rgb(static_cast<float>(cdm2 / kLuminousEfficacy)); }

inline RgbImage constant_image(int w, int h, Rgb value) { return RgbImage(w, h, value); }

inline HdrPanorama uniform_panorama(int height, double cdm2, std::optional<double> k = std::nullopt) {
  return HdrPanorama(constant_image(2 * height, height, gray_for_luminance(cdm2)), k);
}

// Panorama whose pixel values are f(direction of the pixel center).
inline RgbImage panorama_from(int height, const std::function<Rgb(const Eigen::Vector3d&)>& f) {
  RgbImage img(2 * height, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < 2 * height; ++x) img(x, y) = f(to_vector(pixel_to_dir({x + 0.5, y + 0.5}, 2 * height, height)));
  return img;
}

// Smooth, strictly positive field built from low-order spherical terms.
struct SmoothField {
  double c0 = 1, cx = 0, cy = 0, cz = 0, cxy = 0, cz2 = 0;

  static SmoothField random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    return {1.0, u(rng), u(rng), u(rng), u(rng), u(rng)};
  }
  double operator()(const Eigen::Vector3d& d) const {
    return c0 + cx * d.x() + cy * d.y() + cz * d.z() + cxy * d.x() * d.y() + cz2 * (d.z() * d.z() - 1.0 / 3.0);
  }
};

inline RoomLayout rectangle_room(double w, double d, double h = 2.5) {
  RoomLayout l;
  l.corners = {{0, 0}, {w, 0}, {w, d}, {0, d}};
  l.height_m = h;
  l.kitchen_walls.assign(4, false);
  return l;
}

inline KitchenComponent box_component(const std::string& name, double width, double depth = 0.6, double height = 0.9,
                                      ComponentCategory cat = ComponentCategory::cabinet) {
  KitchenComponent c;
  c.name = name;
  c.category = cat;
  c.width_m = width;
  c.depth_m = depth;
  c.height_m = height;
  return c;
}

// The 4.0 m single-wall example: widths [0.9, 0.6, 0.76, 0.9, 0.6].
inline std::vector<KitchenComponent> example_library() {
  return {box_component("fridge", 0.9, 0.7, 1.8, ComponentCategory::refrigerator), box_component("base600", 0.6),
          box_component("sink760", 0.76, 0.6, 0.9, ComponentCategory::sink),
          box_component("oven900", 0.9, 0.6, 0.9, ComponentCategory::oven),
          box_component("drawer600", 0.6)};
}
inline std::vector<std::string> example_sequence() { return {"fridge", "base600", "sink760", "oven900", "drawer600"}; }

// Writes the example library as JSON metadata files into `dir`.
inline void write_library(const fs::path& dir, const std::vector<KitchenComponent>& lib) {
  fs::create_directories(dir);
  for (const auto& c : lib) write_text(dir / (c.name + ".json"), component_to_json(c).dump(2));
}

// Columns of a w-wide panorama whose horizontal ray from the layout camera
// hits `wall` first.
inline std::vector<bool> wall_mask(const RoomLayout& layout, std::size_t wall, int width) {
  std::vector<bool> mask(static_cast<std::size_t>(width), false);
  const Vec2 cam = layout.camera_position();
  for (int c = 0; c < width; ++c) {
    const double phi = kTwoPi * ((c + 0.5) / width - 0.5);
    const Vec2 dir(std::cos(phi), -std::sin(phi));
    std::optional<double> best;
    std::size_t best_wall = 0;
    for (std::size_t i = 0; i < layout.wall_count(); ++i) {
      const auto t = ray_segment(cam, dir, layout.corners[i], layout.corners[(i + 1) % layout.wall_count()]);
      if (t && (!best || *t < *best)) {
        best = t;
        best_wall = i;
      }
    }
    mask[static_cast<std::size_t>(c)] = best && best_wall == wall;
  }
  return mask;
}

// Inputs for a staging run: a 4.0 x 3.0 m room with a window opposite the
// kitchen wall, the example library and a calibrated sky.
struct StageInputs {
  fs::path layout, mask, components, env;
};

inline StageInputs write_stage_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  RoomLayout room = rectangle_room(4.0, 3.0, 2.5);
  room.windows.push_back({2, 1.0, 1.5, 0.9, 1.2});
  room.kitchen_walls.assign(4, false);
  StageInputs in{dir / "layout.json", dir / "mask.json", dir / "components", dir / "env.exr"};
  write_text(in.mask, mask_to_json(wall_mask(room, 0, 256)).dump());
  room.kitchen_walls[0] = true;
  write_text(in.layout, layout_to_json(room).dump(2));
  write_library(in.components, example_library());
  const RgbImage sky = panorama_from(32, [](const Eigen::Vector3d& d) {
    const double l = 2000 + 1500 * std::max(0.0, d.z()) + 300 * d.x();
    return Rgb(static_cast<float>(l / kLuminousEfficacy));
  });
  write_exr(in.env, sky, 1.0);
  return in;
}

}  // namespace panostage::testing
