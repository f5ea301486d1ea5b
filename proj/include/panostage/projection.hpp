// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "panostage/error.hpp"
#include "panostage/image.hpp"
#include "panostage/parallel.hpp"
#include "panostage/radiance.hpp"

namespace panostage {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }

// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0;
  return r;
}

// World frame: +z up, +x the front lens axis. Azimuth phi turns clockwise
// seen from above (toward -y), matching increasing panorama columns.
struct SphericalDirection {
  double theta = 0;  // zenith angle, [0, pi]
  double phi = 0;    // azimuth, [0, 2*pi)
};

inline Eigen::Vector3d to_vector(const SphericalDirection& d) {
  const double s = std::sin(d.theta);
  return {s * std::cos(d.phi), -s * std::sin(d.phi), std::cos(d.theta)};
}

inline SphericalDirection to_spherical(const Eigen::Vector3d& v) {
  return {std::atan2(std::hypot(v.x(), v.y()), v.z()), wrap_angle(std::atan2(-v.y(), v.x()))};
}

struct PixelCoord {
  double x = 0;
  double y = 0;
};

// Continuous equirect coordinates; the horizontal image center is phi = 0
// and the top edge is theta = 0.
inline PixelCoord dir_to_pixel(const SphericalDirection& d, int width, int height) {
  double x = width * (0.5 + d.phi / kTwoPi);
  x = std::fmod(x, static_cast<double>(width));
  if (x < 0) x += width;
  return {x, height * (d.theta / kPi)};
}

inline SphericalDirection pixel_to_dir(const PixelCoord& p, int width, int height) {
  return {kPi * (p.y / height), wrap_angle(kTwoPi * (p.x / width - 0.5))};
}

enum class HorizontalEdge { clamp, wrap };

// Bilinear lookup at continuous coordinates. Vertical edges always clamp.
inline Rgbd sample_bilinear(const RgbImage& img, double x, double y, HorizontalEdge edge) {
  const int w = img.width();
  const int h = img.height();
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double tx = fx - x0f;
  const double ty = fy - y0f;
  auto column = [&](double c) {
    long long i = static_cast<long long>(c);
    if (edge == HorizontalEdge::wrap) {
      i %= w;
      if (i < 0) i += w;
      return static_cast<int>(i);
    }
    return static_cast<int>(std::clamp<long long>(i, 0, w - 1));
  };
  auto row = [&](double r) { return static_cast<int>(std::clamp<long long>(static_cast<long long>(r), 0, h - 1)); };
  const int xa = column(x0f), xb = column(x0f + 1);
  const int ya = row(y0f), yb = row(y0f + 1);
  const Rgbd c00(img(xa, ya)), c10(img(xb, ya)), c01(img(xa, yb)), c11(img(xb, yb));
  return (c00 * (1 - tx) + c10 * tx) * (1 - ty) + (c01 * (1 - tx) + c11 * tx) * ty;
}

// Equirect lookup along a world direction. column_offset shifts the sampled
// column (used to rotate an environment about the vertical axis).
inline Rgbd sample_equirect(const RgbImage& pano, const Eigen::Vector3d& dir, double column_offset = 0) {
  auto p = dir_to_pixel(to_spherical(dir), pano.width(), pano.height());
  return sample_bilinear(pano, p.x + column_offset, p.y, HorizontalEdge::wrap);
}

// Columns [w/4, 3w/4) of an equirect panorama: azimuth [-pi/2, pi/2) about
// the front axis. Width equals the source height.
struct HalfEquirect {
  RgbImage image;
};

inline HalfEquirect crop_front_hemisphere(const RgbImage& pano) {
  require(pano.height() > 0 && pano.width() == 2 * pano.height(),
          "crop_front_hemisphere requires width == 2 * height");
  require(pano.width() % 4 == 0, "crop_front_hemisphere requires width divisible by 4");
  return {crop_columns(pano, pano.width() / 4, pano.width() / 2)};
}

inline HalfEquirect crop_front_hemisphere(const HdrPanorama& pano) { return crop_front_hemisphere(pano.pixels()); }

// Square 180-degree fisheye in orthographic projection (image radius
// r = sin(theta) about the optical axis). Pixels whose centers fall outside
// the unit disk are invalid: they hold zero and are excluded from statistics.
class OrthographicFisheye {
 public:
  OrthographicFisheye() = default;

  explicit OrthographicFisheye(RgbImage pixels) : pixels_(std::move(pixels)) {
    require(pixels_.width() == pixels_.height() && pixels_.width() >= 1, "fisheye image must be square");
    for (int y = 0; y < side(); ++y) {
      for (int x = 0; x < side(); ++x) {
        if (!is_valid(x, y)) {
          pixels_(x, y) = Rgb{};
        } else {
          require(is_valid_radiance(pixels_(x, y)), "fisheye pixels must be finite and nonnegative");
        }
      }
    }
  }

  int side() const noexcept { return pixels_.width(); }
  const RgbImage& pixels() const noexcept { return pixels_; }

  // Normalized image-plane coordinates of a pixel center; u to the right,
  // v up, both in [-1, 1].
  static double normalized_u(int x, int side) { return 2.0 * (x + 0.5) / side - 1.0; }
  static double normalized_v(int y, int side) { return 1.0 - 2.0 * (y + 0.5) / side; }

  static bool center_in_disk(int x, int y, int side) {
    const double u = normalized_u(x, side);
    const double v = normalized_v(y, side);
    return u * u + v * v <= 1.0;
  }

  bool is_valid(int x, int y) const { return center_in_disk(x, y, side()); }

  // Number of in-disk pixel centers at this resolution.
  long long disk_pixel_count() const {
    long long n = 0;
    for (int y = 0; y < side(); ++y)
      for (int x = 0; x < side(); ++x) n += is_valid(x, y) ? 1 : 0;
    return n;
  }

  friend bool operator==(const OrthographicFisheye&, const OrthographicFisheye&) = default;

 private:
  RgbImage pixels_;
};

// World direction seen by a fisheye image-plane point (u, v) with u^2+v^2 <= 1.
// The optical axis is +x, image right is -y, image up is +z.
inline Eigen::Vector3d fisheye_direction(double u, double v) {
  return {std::sqrt(std::max(0.0, 1.0 - u * u - v * v)), -u, v};
}

inline OrthographicFisheye equirect_to_orthographic(const HalfEquirect& half, int side) {
  require(side >= 2, "fisheye side must be at least 2");
  const RgbImage& src = half.image;
  require(src.height() > 0 && src.width() == src.height(), "half-equirect image must be square");
  RgbImage out(side, side);
  const double w = src.width();
  const double h = src.height();
  parallel_for(side, [&](int y) {
    const double v = OrthographicFisheye::normalized_v(y, side);
    for (int x = 0; x < side; ++x) {
      const double u = OrthographicFisheye::normalized_u(x, side);
      if (u * u + v * v > 1.0) continue;
      const Eigen::Vector3d d = fisheye_direction(u, v);
      const double zenith = std::atan2(std::hypot(d.x(), d.y()), d.z());
      const double azimuth = std::atan2(-d.y(), d.x());  // [-pi/2, pi/2]
      const double sx = w * (azimuth + kPi / 2) / kPi;
      const double sy = h * zenith / kPi;
      const Rgbd c = sample_bilinear(src, sx, sy, HorizontalEdge::clamp);
      out(x, y) = Rgb(c);
    }
  });
  return OrthographicFisheye(std::move(out));
}

struct PerspectiveView {
  double fov_deg = 90;  // horizontal
  double yaw_deg = 0;
  double pitch_deg = 0;
  int width = 512;
  int height = 512;
};

inline void validate_view(const PerspectiveView& v) {
  require(std::isfinite(v.fov_deg) && v.fov_deg > 0 && v.fov_deg < 180, "fov must lie in (0, 180) degrees");
  require(std::isfinite(v.pitch_deg) && std::abs(v.pitch_deg) <= 90, "|pitch| must not exceed 90 degrees");
  require(std::isfinite(v.yaw_deg), "yaw must be finite");
  require(v.width > 0 && v.height > 0, "view dimensions must be positive");
}

// Pinhole camera basis for a view; rays are forward + ndc_x*right + ndc_y*up.
struct ViewBasis {
  Eigen::Vector3d forward, right, up;
  double tan_half_x = 1, tan_half_y = 1;
};

inline ViewBasis view_basis(const PerspectiveView& v) {
  validate_view(v);
  const double yaw = deg_to_rad(std::fmod(v.yaw_deg, 360.0));
  const double pitch = deg_to_rad(v.pitch_deg);
  ViewBasis b;
  b.forward = to_vector({kPi / 2 - pitch, yaw});
  b.right = to_vector({kPi / 2, yaw + kPi / 2});
  b.up = b.right.cross(b.forward);
  b.tan_half_x = std::tan(deg_to_rad(v.fov_deg) / 2);
  b.tan_half_y = b.tan_half_x * v.height / v.width;
  return b;
}

inline Eigen::Vector3d view_ray(const ViewBasis& b, const PerspectiveView& v, int px, int py) {
  const double nx = (2.0 * (px + 0.5) / v.width - 1.0) * b.tan_half_x;
  const double ny = (1.0 - 2.0 * (py + 0.5) / v.height) * b.tan_half_y;
  return (b.forward + nx * b.right + ny * b.up).normalized();
}

inline RgbImage pano_to_perspective(const RgbImage& pano, const PerspectiveView& view) {
  const ViewBasis basis = view_basis(view);
  RgbImage out(view.width, view.height);
  parallel_for(view.height, [&](int y) {
    for (int x = 0; x < view.width; ++x) out(x, y) = Rgb(sample_equirect(pano, view_ray(basis, view, x, y)));
  });
  return out;
}

inline RgbImage pano_to_perspective(const HdrPanorama& pano, const PerspectiveView& view) {
  return pano_to_perspective(pano.pixels(), view);
}

}  // namespace panostage
