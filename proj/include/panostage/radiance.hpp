// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/image.hpp"
#include "panostage/parallel.hpp"

namespace panostage {

// Luminous efficacy (lm/W) applied to Rec. 709 relative luminance.
inline constexpr double kLuminousEfficacy = 179.0;
inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

template <typename T>
double luminance(const BasicRgb<T>& c) {
  return kLuminousEfficacy * (kLumaR * static_cast<double>(c.r) + kLumaG * static_cast<double>(c.g) +
                              kLumaB * static_cast<double>(c.b));
}

// Equirectangular linear-radiance panorama (width == 2 * height) plus the
// accumulated photometric calibration factor, if any.
class HdrPanorama {
 public:
  HdrPanorama() = default;

  explicit HdrPanorama(RgbImage pixels, std::optional<double> calibration = std::nullopt)
      : pixels_(std::move(pixels)), calibration_(calibration) {
    require(pixels_.height() > 0 && pixels_.width() == 2 * pixels_.height(),
            "panorama must satisfy width == 2 * height (got " + std::to_string(pixels_.width()) + "x" +
                std::to_string(pixels_.height()) + ")");
    if (calibration_) {
      require(std::isfinite(*calibration_) && *calibration_ > 0, "calibration factor must be positive and finite");
    }
    for (const auto& p : pixels_.pixels()) {
      require(is_valid_radiance(p), "panorama pixels must be finite and nonnegative");
    }
  }

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  const RgbImage& pixels() const noexcept { return pixels_; }
  const Rgb& operator()(int x, int y) const { return pixels_(x, y); }

  bool calibrated() const noexcept { return calibration_.has_value(); }
  // Calibrated(k) carries k; nullopt means Uncalibrated.
  std::optional<double> calibration() const noexcept { return calibration_; }

  friend bool operator==(const HdrPanorama&, const HdrPanorama&) = default;

 private:
  RgbImage pixels_;
  std::optional<double> calibration_;
};

struct ExposureFrame {
  RgbImage image;      // normalized code values in [0, 1]
  double exposure_s = 0;
};

struct ExposureBracket {
  std::vector<ExposureFrame> frames;
};

// Hat weight 1 - |2v - 1|^2.
inline double bracket_weight(double v) {
  const double d = 2.0 * v - 1.0;
  return std::max(0.0, 1.0 - d * d);
}

inline constexpr double kSaturationLevel = 0.99;

inline void validate_bracket(const ExposureBracket& bracket) {
  require(!bracket.frames.empty(), "exposure bracket is empty");
  const auto& first = bracket.frames.front().image;
  for (const auto& f : bracket.frames) {
    require(f.image.width() == first.width() && f.image.height() == first.height(),
            "bracket frames have mismatched dimensions");
    require(std::isfinite(f.exposure_s) && f.exposure_s > 0, "exposure time must be positive");
    for (const auto& p : f.image.pixels()) require(is_valid_radiance(p), "bracket frame values must be finite and nonnegative");
  }
  if (bracket.frames.size() > 1) {
    const bool increasing = bracket.frames[1].exposure_s > bracket.frames[0].exposure_s;
    for (std::size_t i = 1; i < bracket.frames.size(); ++i) {
      const double a = bracket.frames[i - 1].exposure_s;
      const double b = bracket.frames[i].exposure_s;
      require(a != b, "exposure times must be pairwise distinct");
      require((b > a) == increasing, "exposure times must be strictly monotonic");
    }
  }
}

// Weighted per-channel average of v/t. Values at or above the saturation
// level only count for the shortest exposure. Pixels where every weight
// vanishes fall back to the shortest exposure when bright, else the longest.
inline RgbImage merge_exposures(const ExposureBracket& bracket) {
  validate_bracket(bracket);
  const auto& frames = bracket.frames;
  std::size_t shortest = 0, longest = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].exposure_s < frames[shortest].exposure_s) shortest = i;
    if (frames[i].exposure_s > frames[longest].exposure_s) longest = i;
  }
  const int w = frames.front().image.width();
  const int h = frames.front().image.height();
  RgbImage out(w, h);

  auto merge_channel = [&](int x, int y, float Rgb::*channel) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const double v = frames[i].image(x, y).*channel;
      if (v >= kSaturationLevel && i != shortest) continue;
      const double wt = bracket_weight(v);
      num += wt * (v / frames[i].exposure_s);
      den += wt;
    }
    if (den > 0) return num / den;
    const double vs = frames[shortest].image(x, y).*channel;
    const auto& pick = vs >= 0.5 ? frames[shortest] : frames[longest];
    return static_cast<double>(pick.image(x, y).*channel) / pick.exposure_s;
  };

  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = Rgb(static_cast<float>(merge_channel(x, y, &Rgb::r)),
                      static_cast<float>(merge_channel(x, y, &Rgb::g)),
                      static_cast<float>(merge_channel(x, y, &Rgb::b)));
    }
  });
  return out;
}

inline HdrPanorama merge_brackets(const ExposureBracket& bracket) {
  return HdrPanorama(merge_exposures(bracket));
}

using LuminanceMap = Image<double>;

inline LuminanceMap luminance_map(const RgbImage& image) {
  LuminanceMap out(image.width(), image.height());
  parallel_for(image.height(), [&](int y) {
    auto src = image.row(y);
    auto dst = out.row(y);
    for (std::size_t x = 0; x < src.size(); ++x) {
      if (!is_valid_radiance(src[x])) throw ValidationError("luminance_map: pixel channels must be finite and nonnegative");
      dst[x] = luminance(src[x]);
    }
  });
  return out;
}

inline LuminanceMap luminance_map(const HdrPanorama& pano) { return luminance_map(pano.pixels()); }

inline HdrPanorama scale_radiance(const HdrPanorama& pano, double k) {
  if (!std::isfinite(k) || k <= 0) throw ValidationError("scale factor must be positive and finite");
  RgbImage scaled = pano.pixels();
  for (auto& p : scaled.pixels()) {
    p = Rgb(static_cast<float>(p.r * k), static_cast<float>(p.g * k), static_cast<float>(p.b * k));
  }
  const double composed = pano.calibration().value_or(1.0) * k;
  return HdrPanorama(std::move(scaled), composed);
}

}  // namespace panostage
