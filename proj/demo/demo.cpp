// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic end-to-end run: capture pair, calibration, staging and a counter
// probe. Writes a servable workspace into the output directory.

#include <iostream>

#include "panostage/panostage.hpp"

namespace ps = panostage;

namespace {

constexpr double kCameraGain = 0.25;

ps::RgbImage synth_panorama(int height, double base, double zenith, double front) {
  ps::RgbImage img(2 * height, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Vector3d d = ps::to_vector(ps::pixel_to_dir({x + 0.5, y + 0.5}, img.width(), height));
      const double l = base + zenith * std::max(0.0, d.z()) + front * std::max(0.0, d.x());
      img(x, y) = ps::Rgb(static_cast<float>(l / ps::kLuminousEfficacy));
    }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const ps::fs::path src = PANOSTAGE_DEMO_DIR;
  const ps::fs::path out = argc > 1 ? ps::fs::path(argv[1]) : ps::fs::path("panostage-demo");
  try {
    ps::fs::create_directories(out / "capture");
    const ps::HdrPanorama indoor_true(synth_panorama(256, 60, 40, 120));
    const ps::HdrPanorama outdoor_true(synth_panorama(256, 2000, 1500, 300));
    ps::write_exr(out / "capture/indoor.exr", ps::scale_radiance(indoor_true, kCameraGain).pixels());
    ps::write_exr(out / "capture/outdoor.exr", ps::scale_radiance(outdoor_true, kCameraGain).pixels());
    const double lux = ps::illuminance_from_fisheye(ps::front_fisheye(indoor_true));

    ps::CalibrateArgs cal;
    cal.indoor = out / "capture/indoor.exr";
    cal.outdoor = out / "capture/outdoor.exr";
    cal.illuminance_lux = lux;
    cal.out_dir = out;
    const auto k = ps::cmd_calibrate(cal);
    ps::fs::rename(out / "outdoor.exr", out / "env.exr");
    std::cout << "meter " << lux << " lux, k = " << k.k << " (gain " << kCameraGain << ")\n";

    for (const char* f : {"layout.json", "mask.json", "workspace.json"})
      ps::fs::copy_file(src / f, out / f, ps::fs::copy_options::overwrite_existing);
    ps::fs::copy(src / "components", out / "components",
                 ps::fs::copy_options::recursive | ps::fs::copy_options::overwrite_existing);

    ps::StageArgs stage;
    stage.layout = out / "layout.json";
    stage.mask = out / "mask.json";
    stage.components_dir = out / "components";
    stage.env = out / "env.exr";
    stage.out_dir = out / "staged";
    stage.sequence = {"fridge", "base600", "sink760", "oven900", "drawer600"};
    stage.seed = 7;
    stage.spp = 8;
    stage.view.width = 320;
    stage.view.height = 240;
    stage.view.yaw_deg = -90;
    const auto staged = ps::cmd_stage(stage);
    std::cout << "layout " << ps::to_string(staged.plan.type) << "\n";
    for (const auto& e : staged.plan.entries)
      std::cout << "  " << e.component << " wall " << e.wall << " offset " << e.offset_m << " m scale "
                << e.transform.width_scale << "\n";

    const ps::SceneTracer tracer(staged.scene);
    for (const auto& e : staged.plan.entries) {
      const Eigen::Vector3d top =
          ps::apply_transform(e.transform, Eigen::Vector3d(0, 0.5 * e.depth_m, e.height_m + 0.01));
      const auto r = ps::irradiance_probe(tracer, {top, Eigen::Vector3d::UnitZ(), 4096, 7, 0});
      std::cout << "  probe on " << e.component << ": " << r.illuminance_lux << " +- " << r.standard_error_lux << " lux\n";
    }
    std::cout << "wrote " << out.string() << " (serve with: panostage serve --workspace " << out.string() << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "demo failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
