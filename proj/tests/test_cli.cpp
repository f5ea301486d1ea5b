// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "panostage/cli.hpp"
#include "support.hpp"

namespace panostage {
namespace {

using testing::TempDir;
using testing::uniform_panorama;

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "panostage");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return files;
}

TEST(Cli, HelpAndUsage) {
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"calibrate", "project", "stage", "merge", "stats", "serve"})
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const auto stage_help = run({"stage", "--help"});
  EXPECT_EQ(stage_help.code, 0);
  EXPECT_NE(stage_help.out.find("--sequence"), std::string::npos);
}

TEST(Cli, CalibrateMissingLuxIsUsageError) {
  TempDir dir("cal");
  save_panorama(dir / "in.exr", uniform_panorama(32, 100));
  save_panorama(dir / "out.exr", uniform_panorama(32, 5000));
  const auto r = run({"calibrate", "--indoor", (dir / "in.exr").string(), "--outdoor", (dir / "out.exr").string(), "--out",
                      (dir / "res").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--lux"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "res"));
  CalibrateArgs a{dir / "in.exr", dir / "out.exr", std::nullopt, dir / "res", 0};
  EXPECT_THROW(cmd_calibrate(a), ValidationError);
}

TEST(Cli, CalibrateMissingFileIsIoError) {
  TempDir dir("cal");
  const auto r = run({"calibrate", "--indoor", (dir / "nope.exr").string(), "--outdoor", (dir / "nope.exr").string(),
                      "--lux", "300", "--out", (dir / "res").string()});
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, CalibrateZeroPanoramaIsNumericError) {
  TempDir dir("cal");
  save_panorama(dir / "in.exr", uniform_panorama(32, 0));
  const auto r = run({"calibrate", "--indoor", (dir / "in.exr").string(), "--outdoor", (dir / "in.exr").string(), "--lux",
                      "300", "--out", (dir / "res").string()});
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, CalibratePassthroughWhenAlreadyCalibrated) {
  TempDir dir("cal");
  const HdrPanorama indoor = uniform_panorama(64, 100);
  const HdrPanorama outdoor(testing::panorama_from(64, [](const Eigen::Vector3d& d) { return Rgb(static_cast<float>(20 + 10 * d.z())); }));
  save_panorama(dir / "in.exr", indoor);
  save_panorama(dir / "out.exr", outdoor);
  const double lux = kPi * luminance(indoor(0, 0));
  std::ostringstream lux_text;
  lux_text << std::setprecision(17) << lux;
  const auto r = run({"calibrate", "--indoor", (dir / "in.exr").string(), "--outdoor", (dir / "out.exr").string(), "--lux",
                      lux_text.str(), "--out", (dir / "res").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["k"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(json::parse(read_text(dir / "res/calibration.json")), j);
  const ExrImage back = read_exr(dir / "res/outdoor.exr");
  ASSERT_TRUE(back.calibration.has_value());
  EXPECT_NEAR(*back.calibration, 1.0, 1e-12);
  for (std::size_t i = 0; i < back.pixels.pixels().size(); ++i)
    EXPECT_NEAR(back.pixels.pixels()[i].r, outdoor.pixels().pixels()[i].r, 1e-6 * outdoor.pixels().pixels()[i].r);
}

TEST(Cli, CalibrateRecoversInverseScale) {
  TempDir dir("cal");
  const RgbImage base = testing::panorama_from(128, [](const Eigen::Vector3d& d) {
    return testing::gray_for_luminance(80 + 30 * d.z() + 10 * d.x());
  });
  // Cosine-weighted integral over the front hemisphere (+x axis) of the field.
  const double true_lux = luminance(testing::gray_for_luminance(1)) * (80 * kPi + 10 * 2 * kPi / 3);
  for (double s : {0.1, 0.5, 2.0, 10.0}) {
    RgbImage scaled = base;
    for (auto& p : scaled.pixels()) p = Rgb(static_cast<float>(p.r * s), static_cast<float>(p.g * s), static_cast<float>(p.b * s));
    save_panorama(dir / "in.exr", HdrPanorama(scaled));
    const auto k = cmd_calibrate({dir / "in.exr", dir / "in.exr", true_lux, dir / "res", 512}).k;
    EXPECT_NEAR(k * s, 1.0, 1e-3) << s;
  }
}

TEST(Cli, ProjectFisheyeMatchesLibraryBytes) {
  TempDir dir("proj");
  const HdrPanorama pano(testing::panorama_from(64, [](const Eigen::Vector3d& d) {
    return Rgb(static_cast<float>(1 + d.x()), static_cast<float>(1 + d.y()), static_cast<float>(1 + d.z()));
  }));
  save_panorama(dir / "p.exr", pano);
  const auto r = run({"project", "--pano", (dir / "p.exr").string(), "--mode", "fisheye", "--side", "48", "--out",
                      (dir / "cli.exr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const RgbImage lib = equirect_to_orthographic(crop_front_hemisphere(pano), 48).pixels();
  EXPECT_EQ(read_exr(dir / "cli.exr").pixels, lib);
  write_exr(dir / "lib.exr", lib);
  EXPECT_EQ(read_binary(dir / "cli.exr"), read_binary(dir / "lib.exr"));
}

TEST(Cli, ProjectPerspective) {
  TempDir dir("proj");
  save_panorama(dir / "c.exr", uniform_panorama(32, 50));
  ASSERT_EQ(run({"project", "--pano", (dir / "c.exr").string(), "--out", (dir / "v.exr").string(), "--width", "20",
                 "--height", "10", "--yaw", "33"})
                .code,
            0);
  const RgbImage v = read_exr(dir / "v.exr").pixels;
  ASSERT_EQ(v.width(), 20);
  for (const auto& p : v.pixels()) EXPECT_EQ(p, uniform_panorama(32, 50)(0, 0));

  const HdrPanorama pano(testing::panorama_from(32, [](const Eigen::Vector3d& d) { return Rgb(static_cast<float>(2 + d.y())); }));
  save_panorama(dir / "p.exr", pano);
  for (const char* yaw : {"10", "370"})
    ASSERT_EQ(run({"project", "--pano", (dir / "p.exr").string(), "--out", (dir / (std::string(yaw) + ".exr")).string(),
                   "--width", "16", "--height", "16", "--yaw", yaw})
                  .code,
              0);
  const RgbImage a = read_exr(dir / "10.exr").pixels, b = read_exr(dir / "370.exr").pixels;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) EXPECT_NEAR(a.pixels()[i].r, b.pixels()[i].r, 1e-5);
  EXPECT_EQ(run({"project", "--pano", (dir / "p.exr").string(), "--out", (dir / "x.exr").string(), "--fov", "200"}).code, 2);
  EXPECT_EQ(run({"project", "--pano", (dir / "p.exr").string(), "--out", (dir / "x.exr").string(), "--mode", "cube"}).code, 2);
}

std::vector<std::string> stage_args(const testing::StageInputs& in, const fs::path& out) {
  return {"stage", "--layout", in.layout.string(), "--components", in.components.string(), "--sequence",
          "fridge,base600,sink760,oven900,drawer600", "--env", in.env.string(), "--out", out.string(), "--seed", "5",
          "--spp", "2", "--width", "24", "--height", "16", "--yaw", "90"};
}

TEST(Cli, StageIsDeterministic) {
  TempDir dir("stage");
  const auto in = testing::write_stage_inputs(dir / "in");
  const auto a = run(stage_args(in, dir / "a"));
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run(stage_args(in, dir / "b"));
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ta = tree_contents(dir / "a"), tb = tree_contents(dir / "b");
  EXPECT_EQ(ta, tb);
  for (const char* f : {"plan.json", "preview.exr", "preview.png", "scene/scene.json", "scene/env.exr"}) EXPECT_TRUE(ta.count(f)) << f;

  // The plan file is the library's placement, serialized.
  const auto library = load_component_library(in.components);
  const auto plan = place_components(load_layout(in.layout), library, testing::example_sequence(), CornerPolicy::scale_last);
  EXPECT_EQ(ta.at("plan.json"), plan_json_text(plan));

  auto other_seed = stage_args(in, dir / "c");
  other_seed[std::find(other_seed.begin(), other_seed.end(), "--seed") - other_seed.begin() + 1] = "6";
  ASSERT_EQ(run(other_seed).code, 0);
  const auto tc = tree_contents(dir / "c");
  EXPECT_EQ(tc.at("plan.json"), ta.at("plan.json"));
  EXPECT_NE(tc.at("preview.exr"), ta.at("preview.exr"));
}

TEST(Cli, StageWithMaskSelectsKitchenWall) {
  TempDir dir("stage");
  const auto in = testing::write_stage_inputs(dir / "in");
  RoomLayout unflagged = load_layout(in.layout);
  unflagged.kitchen_walls.clear();
  write_text(dir / "in/bare.json", layout_to_json(unflagged).dump());
  auto args = stage_args(in, dir / "out");
  args[2] = (dir / "in/bare.json").string();
  args.insert(args.end(), {"--mask", in.mask.string()});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("layout I, 5 components"), std::string::npos);
  const json plan = json::parse(read_text(dir / "out/plan.json"));
  EXPECT_EQ(plan["wall_run"], json::array({0}));
}

TEST(Cli, StageErrors) {
  TempDir dir("stage");
  const auto in = testing::write_stage_inputs(dir / "in");
  StageArgs a;
  a.layout = in.layout;
  a.components_dir = in.components;
  a.env = in.env;
  a.out_dir = dir / "out";
  EXPECT_THROW(cmd_stage(a), ValidationError);
  EXPECT_FALSE(fs::exists(dir / "out"));

  auto overflow = stage_args(in, dir / "o");
  overflow[6] = "fridge,fridge,fridge,fridge,fridge";
  const auto r = run(overflow);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("overflow"), std::string::npos);

  auto unknown = stage_args(in, dir / "u");
  unknown[6] = "fridge,teapot";
  EXPECT_EQ(run(unknown).code, 2);

  save_panorama(dir / "raw.exr", uniform_panorama(16, 100));
  auto raw = stage_args(in, dir / "r");
  raw[8] = (dir / "raw.exr").string();
  const auto uncal = run(raw);
  EXPECT_EQ(uncal.code, 2);
  EXPECT_NE(uncal.err.find("calibrated"), std::string::npos);

  write_text(dir / "mat.json", R"({"body": {"albedo": [1.2, 0.5, 0.5]}})");
  auto bright = stage_args(in, dir / "m");
  bright.insert(bright.end(), {"--materials", (dir / "mat.json").string()});
  EXPECT_EQ(run(bright).code, 2);
}

TEST(Cli, TomlAndJsonJobFiles) {
  TempDir dir("cfg");
  const auto in = testing::write_stage_inputs(dir / "in");
  const std::string toml = "[stage]\nlayout = \"" + in.layout.string() + "\"\ncomponents = \"" + in.components.string() +
                           "\"\nsequence = [\"fridge\", \"base600\", \"sink760\", \"oven900\", \"drawer600\"]\nenv = \"" +
                           in.env.string() + "\"\nout = \"" + (dir / "toml").string() +
                           "\"\nseed = 5\nspp = 2\nwidth = 24\nheight = 16\nyaw = 90\n";
  write_text(dir / "job.toml", toml);
  const auto t = run({"--config", (dir / "job.toml").string(), "stage"});
  ASSERT_EQ(t.code, 0) << t.err;

  const json job = {{"stage",
                     {{"layout", in.layout.string()},
                      {"components", in.components.string()},
                      {"sequence", testing::example_sequence()},
                      {"env", in.env.string()},
                      {"out", (dir / "json").string()},
                      {"seed", 5},
                      {"spp", 2},
                      {"width", 24},
                      {"height", 16},
                      {"yaw", 90}}}};
  write_text(dir / "job.json", job.dump(2));
  const auto j = run({"--config", (dir / "job.json").string(), "stage"});
  ASSERT_EQ(j.code, 0) << j.err;

  ASSERT_EQ(run(stage_args(in, dir / "flags")).code, 0);
  EXPECT_EQ(tree_contents(dir / "toml"), tree_contents(dir / "flags"));
  EXPECT_EQ(tree_contents(dir / "json"), tree_contents(dir / "flags"));

  json bad = job;
  bad["stage"]["colour"] = "red";
  write_text(dir / "bad.json", bad.dump());
  EXPECT_EQ(run({"--config", (dir / "bad.json").string(), "stage"}).code, 2);
  write_text(dir / "bad.toml", toml + "colour = \"red\"\n");
  EXPECT_EQ(run({"--config", (dir / "bad.toml").string(), "stage"}).code, 2);
  write_text(dir / "broken.json", "{\"stage\": ");
  EXPECT_EQ(run({"--config", (dir / "broken.json").string(), "stage"}).code, 2);
}

TEST(Cli, MergeBracket) {
  TempDir dir("merge");
  const std::vector<double> times{0.01, 0.04, 0.16};
  json frames = json::array();
  const float radiance = 2.0f;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::string name = "f" + std::to_string(i) + ".exr";
    write_exr(dir / name, RgbImage(8, 4, Rgb(std::min(1.0f, static_cast<float>(radiance * times[i])))));
    frames.push_back({{"path", name}, {"exposure_s", times[i]}});
  }
  write_text(dir / "bracket.json", json{{"frames", frames}}.dump());
  const auto r = run({"merge", "--bracket", (dir / "bracket.json").string(), "--out", (dir / "hdr.exr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto hdr = read_exr(dir / "hdr.exr");
  for (const auto& p : hdr.pixels.pixels()) EXPECT_NEAR(p.r, radiance, 1e-5);
  write_text(dir / "empty.json", R"({"frames": []})");
  EXPECT_EQ(run({"merge", "--bracket", (dir / "empty.json").string(), "--out", (dir / "x.exr").string()}).code, 2);
}

TEST(Cli, Stats) {
  TempDir dir("stats");
  write_text(dir / "m.csv",
             "scene_id,indoor_path,outdoor_path,E_in_lux,E_out_lux,L_tgt_cdm2,orientation_deg,timestamp_iso8601\n"
             "a,a_in.exr,a_out.exr,300,20000,2,180,2024-05-17T10:15:00Z\n"
             "b,b_in.exr,b_out.exr,-1,20000,2,180,2024-05-17T10:15:00Z\n"
             "c,c_in.exr,c_out.exr,150,9000,40,90,2024-05-17T11:15:00Z\n");
  write_text(dir / "est.csv", "scene_id,L_lowcost_cdm2\na,3\nc,40\n");
  const auto r = run({"stats", "--manifest", (dir / "m.csv").string(), "--estimates", (dir / "est.csv").string(), "--out",
                      (dir / "out.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("row 2 (b)"), std::string::npos);
  EXPECT_EQ(read_text(dir / "out.csv"),
            "scene_id,E_measured_lux,L_std_cdm2,L_lowcost_cdm2,abs_err_cdm2,pct_err\n"
            "a,300,2,3,1,50\n"
            "c,150,40,40,0,0\n");
  const auto checked = run({"stats", "--manifest", (dir / "m.csv").string(), "--estimates", (dir / "est.csv").string(),
                            "--out", (dir / "out2.csv").string(), "--check-files"});
  EXPECT_EQ(checked.code, 2);  // every row rejected: no entries left
}

TEST(Cli, ServeNeedsWorkspace) {
  TempDir dir("serve");
  EXPECT_EQ(run({"serve", "--workspace", (dir / "missing").string()}).code, 3);
}

}  // namespace
}  // namespace panostage
