// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "panostage/error.hpp"

namespace panostage {

template <typename T>
struct BasicRgb {
  T r{}, g{}, b{};

  constexpr BasicRgb() = default;
  constexpr BasicRgb(T r_, T g_, T b_) : r(r_), g(g_), b(b_) {}
  constexpr explicit BasicRgb(T v) : r(v), g(v), b(v) {}

  template <typename U>
  constexpr explicit BasicRgb(const BasicRgb<U>& o)
      : r(static_cast<T>(o.r)), g(static_cast<T>(o.g)), b(static_cast<T>(o.b)) {}

  constexpr BasicRgb& operator+=(const BasicRgb& o) {
    r += o.r; g += o.g; b += o.b;
    return *this;
  }
  constexpr BasicRgb& operator*=(T s) {
    r *= s; g *= s; b *= s;
    return *this;
  }
  friend constexpr BasicRgb operator+(BasicRgb a, const BasicRgb& b) { return a += b; }
  friend constexpr BasicRgb operator*(BasicRgb a, T s) { return a *= s; }
  friend constexpr BasicRgb operator*(T s, BasicRgb a) { return a *= s; }
  friend constexpr BasicRgb operator*(const BasicRgb& a, const BasicRgb& b) {
    return {a.r * b.r, a.g * b.g, a.b * b.b};
  }
  friend constexpr bool operator==(const BasicRgb&, const BasicRgb&) = default;
};

using Rgb = BasicRgb<float>;
using Rgbd = BasicRgb<double>;

template <typename T>
bool is_valid_radiance(const BasicRgb<T>& c) {
  return std::isfinite(c.r) && std::isfinite(c.g) && std::isfinite(c.b) &&
         c.r >= 0 && c.g >= 0 && c.b >= 0;
}

// Row-major 2-D pixel grid. Pixel (x, y) covers [x, x+1) x [y, y+1) in
// continuous image coordinates, so its center sits at (x + 0.5, y + 0.5).
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height) {
    require(width >= 0 && height >= 0, "image dimensions must be nonnegative");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Image(int width, int height, std::vector<T> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    require(width >= 0 && height >= 0, "image dimensions must be nonnegative");
    require(pixels_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
            "pixel buffer size does not match image dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  T& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const T& operator()(int x, int y) const { return pixels_[index(x, y)]; }

  std::span<T> row(int y) {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<T> pixels() noexcept { return pixels_; }
  std::span<const T> pixels() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

using RgbImage = Image<Rgb>;

// Column range [x0, x0 + width) of every row.
template <typename T>
Image<T> crop_columns(const Image<T>& src, int x0, int width) {
  require(x0 >= 0 && width >= 0 && x0 + width <= src.width(), "column crop out of range");
  Image<T> out(width, src.height());
  for (int y = 0; y < src.height(); ++y) {
    auto in = src.row(y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(width));
    std::copy(in.begin(), in.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace panostage
