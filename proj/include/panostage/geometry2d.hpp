// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace panostage {

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(std::span<const Vec2> poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

// Area centroid of a simple polygon.
inline Vec2 polygon_centroid(std::span<const Vec2> poly) {
  double a = 0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double k = cross2(p, q);
    a += k;
    c += (p + q) * k;
  }
  return c / (3.0 * a);
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

// Inside or within `tolerance` of the boundary.
inline bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly, double tolerance = 0) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    if (distance_to_segment(p, poly[i], poly[(i + 1) % n]) <= tolerance) return true;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) { return cross2(b - a, c - a); };
  auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= c.y() &&
           c.y() <= std::max(a.y(), b.y());
  };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

inline bool is_simple_polygon(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if ((poly[i] - poly[(i + 1) % n]).norm() == 0) return false;
  return true;
}

// Ray origin + t*dir against segment [a, b]; returns t > 0 on hit.
inline std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double denom = cross2(dir, e);
  if (denom == 0) return std::nullopt;
  const Vec2 ao = a - origin;
  const double t = cross2(ao, e) / denom;
  const double s = cross2(ao, dir) / denom;
  if (t <= 0 || s < 0 || s > 1) return std::nullopt;
  return t;
}

// Sutherland-Hodgman clip of `subject` by the convex counter-clockwise `clip`.
inline std::vector<Vec2> clip_convex(std::vector<Vec2> subject, std::span<const Vec2> clip) {
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    auto inside = [&](const Vec2& p) { return cross2(b - a, p - a) >= 0; };
    std::vector<Vec2> out;
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Vec2& p = subject[j];
      const Vec2& q = subject[(j + 1) % subject.size()];
      const bool pin = inside(p), qin = inside(q);
      if (pin) out.push_back(p);
      if (pin != qin) {
        const double dp = cross2(b - a, p - a);
        const double dq = cross2(b - a, q - a);
        out.push_back(p + (q - p) * (dp / (dp - dq)));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double convex_overlap_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  const auto clipped = clip_convex(std::vector<Vec2>(a.begin(), a.end()), b);
  return clipped.size() < 3 ? 0.0 : std::abs(signed_area(clipped));
}

}  // namespace panostage
