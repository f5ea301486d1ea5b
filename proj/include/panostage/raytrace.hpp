// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "panostage/mesh.hpp"
#include "panostage/projection.hpp"

namespace panostage {

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // unit
  double tmin = 1e-9;
  double tmax = std::numeric_limits<double>::infinity();
};

struct Triangle {
  Eigen::Vector3d p0, e1, e2;  // p1 = p0 + e1, p2 = p0 + e2
  std::uint32_t tag = 0;       // caller-defined payload (material / emitter id)
};

struct Hit {
  double t = 0;
  std::uint32_t triangle = 0;
  Eigen::Vector3d normal;  // unit geometric normal, unoriented
};

// Moller-Trumbore, double precision.
inline std::optional<double> intersect(const Triangle& tri, const Ray& ray) {
  const Eigen::Vector3d p = ray.dir.cross(tri.e2);
  const double det = tri.e1.dot(p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = ray.origin - tri.p0;
  const double u = s.dot(p) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Eigen::Vector3d q = s.cross(tri.e1);
  const double v = ray.dir.dot(q) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = tri.e2.dot(q) * inv;
  if (t <= ray.tmin || t >= ray.tmax) return std::nullopt;
  return t;
}

// Median-split bounding volume hierarchy over triangles.
class Bvh {
 public:
  Bvh() = default;

  explicit Bvh(std::vector<Triangle> tris) : tris_(std::move(tris)) {
    if (tris_.empty()) return;
    order_.resize(tris_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * tris_.size());
    nodes_.emplace_back();
    build(0, 0, static_cast<std::uint32_t>(tris_.size()));
    std::vector<Triangle> sorted;
    sorted.reserve(tris_.size());
    for (auto i : order_) sorted.push_back(tris_[i]);
    tris_ = std::move(sorted);
  }

  const std::vector<Triangle>& triangles() const { return tris_; }

  std::optional<Hit> closest(Ray ray) const {
    if (nodes_.empty()) return std::nullopt;
    std::optional<Hit> best;
    const Eigen::Vector3d inv = ray.dir.cwiseInverse();
    std::array<std::uint32_t, 64> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (!slab(n, ray, inv)) continue;
      if (n.count > 0) {
        for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
          if (auto t = intersect(tris_[i], ray)) {
            ray.tmax = *t;
            best = Hit{*t, i, Eigen::Vector3d::Zero()};
          }
        }
      } else {
        stack[top++] = n.first;
        stack[top++] = n.first + 1;
      }
    }
    if (best) best->normal = tris_[best->triangle].e1.cross(tris_[best->triangle].e2).normalized();
    return best;
  }

  bool occluded(const Ray& ray) const { return closest(ray).has_value(); }

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    std::uint32_t first = 0;  // triangle offset for leaves, left child otherwise
    std::uint32_t count = 0;  // 0 for interior nodes
  };

  static bool slab(const Node& n, const Ray& r, const Eigen::Vector3d& inv) {
    double t0 = r.tmin, t1 = r.tmax;
    for (int a = 0; a < 3; ++a) {
      double ta = (n.lo[a] - r.origin[a]) * inv[a];
      double tb = (n.hi[a] - r.origin[a]) * inv[a];
      if (ta > tb) std::swap(ta, tb);
      if (std::isnan(ta) || std::isnan(tb)) continue;
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }

  Eigen::Vector3d centroid(std::uint32_t i) const {
    const auto& t = tris_[i];
    return t.p0 + (t.e1 + t.e2) / 3.0;
  }

  void build(std::uint32_t index, std::uint32_t begin, std::uint32_t end) {
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    Eigen::Vector3d clo = lo, chi = hi;
    for (std::uint32_t k = begin; k < end; ++k) {
      const auto& t = tris_[order_[k]];
      for (const Eigen::Vector3d& p : {Eigen::Vector3d(t.p0), Eigen::Vector3d(t.p0 + t.e1), Eigen::Vector3d(t.p0 + t.e2)}) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
      const Eigen::Vector3d c = centroid(order_[k]);
      clo = clo.cwiseMin(c);
      chi = chi.cwiseMax(c);
    }
    const Eigen::Vector3d pad = Eigen::Vector3d::Constant(1e-9);
    nodes_[index].lo = lo - pad;
    nodes_[index].hi = hi + pad;
    if (end - begin <= 4) {
      nodes_[index].first = begin;
      nodes_[index].count = end - begin;
      return;
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroid(a)[axis], cb = centroid(b)[axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    // Children sit next to each other: left at `first`, right at `first + 1`.
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[index].first = left;
    nodes_[index].count = 0;
    build(left, begin, mid);
    build(left + 1, mid, end);
  }

  std::vector<Triangle> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// Orthonormal basis with `n` as the third axis (Duff et al. 2017).
inline std::array<Eigen::Vector3d, 2> tangent_frame(const Eigen::Vector3d& n) {
  const double sign = std::copysign(1.0, n.z());
  const double a = -1.0 / (sign + n.z());
  const double b = n.x() * n.y() * a;
  return {Eigen::Vector3d(1.0 + sign * n.x() * n.x() * a, sign * b, -sign * n.x()),
          Eigen::Vector3d(b, sign + n.y() * n.y() * a, -n.y())};
}

// Cosine-weighted hemisphere direction about `n` from a point of the unit
// square (concentric disk mapping lifted to the hemisphere).
inline Eigen::Vector3d cosine_hemisphere(const Eigen::Vector3d& n, double u1, double u2) {
  const double a = 2.0 * u1 - 1.0;
  const double b = 2.0 * u2 - 1.0;
  double r = 0, phi = 0;
  if (a != 0 || b != 0) {
    if (std::abs(a) > std::abs(b)) {
      r = a;
      phi = (kPi / 4) * (b / a);
    } else {
      r = b;
      phi = kPi / 2 - (kPi / 4) * (a / b);
    }
  }
  const double x = r * std::cos(phi);
  const double y = r * std::sin(phi);
  const double z = std::sqrt(std::max(0.0, 1.0 - x * x - y * y));
  const auto [t, s] = tangent_frame(n);
  return (x * t + y * s + z * n).normalized();
}

// Near-square factorization of n used for jittered stratification.
inline std::pair<int, int> strata_grid(int n) {
  int nx = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (nx > 1 && n % nx != 0) --nx;
  return {nx, n / nx};
}

}  // namespace panostage
