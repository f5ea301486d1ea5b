// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "panostage/error.hpp"

namespace panostage {

// Indexed triangle mesh. Each face belongs to a named material slot.
struct Mesh {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<std::uint32_t> face_slots;  // parallel to triangles
  std::vector<std::string> slot_names;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  std::uint32_t slot_index(const std::string& name) {
    auto it = std::find(slot_names.begin(), slot_names.end(), name);
    if (it != slot_names.end()) return static_cast<std::uint32_t>(it - slot_names.begin());
    slot_names.push_back(name);
    return static_cast<std::uint32_t>(slot_names.size() - 1);
  }

  const std::string& face_slot_name(std::size_t face) const { return slot_names.at(face_slots.at(face)); }

  // Appends `other`, remapping its slots by name.
  void append(const Mesh& other) {
    const auto base = static_cast<std::uint32_t>(positions.size());
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());
    for (std::size_t f = 0; f < other.triangles.size(); ++f) {
      const auto& t = other.triangles[f];
      triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
      face_slots.push_back(slot_index(other.slot_names.at(other.face_slots.at(f))));
    }
  }

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

struct Bounds3 {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d max = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Eigen::Vector3d& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Bounds3& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
};

inline Bounds3 bounds(const Mesh& m) {
  Bounds3 b;
  for (const auto& p : m.positions) b.extend(p);
  return b;
}

inline void validate_mesh(const Mesh& m) {
  require(m.face_slots.size() == m.triangles.size(), "mesh face slot list does not match triangle count");
  for (const auto& t : m.triangles)
    for (auto i : t) require(i < m.positions.size(), "mesh triangle index out of range");
  for (auto s : m.face_slots) require(s < m.slot_names.size(), "mesh face slot out of range");
}

// Axis-aligned box [lo, hi] with outward-facing triangles.
inline void add_box(Mesh& m, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const std::string& slot) {
  const auto s = m.slot_index(slot);
  const auto b = static_cast<std::uint32_t>(m.positions.size());
  for (int i = 0; i < 8; ++i)
    m.positions.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  static constexpr std::array<std::array<std::uint32_t, 3>, 12> faces{{
      {0, 2, 1}, {1, 2, 3},  // z-
      {4, 5, 6}, {5, 7, 6},  // z+
      {0, 1, 4}, {1, 5, 4},  // y-
      {2, 6, 3}, {3, 6, 7},  // y+
      {0, 4, 2}, {2, 4, 6},  // x-
      {1, 3, 5}, {3, 7, 5},  // x+
  }};
  for (const auto& f : faces) {
    m.triangles.push_back({b + f[0], b + f[1], b + f[2]});
    m.face_slots.push_back(s);
  }
}

// Planar quad a-b-c-d (counter-clockwise seen from the front side).
inline void add_quad(Mesh& m, const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                     const Eigen::Vector3d& d, const std::string& slot) {
  const auto s = m.slot_index(slot);
  const auto base = static_cast<std::uint32_t>(m.positions.size());
  m.positions.insert(m.positions.end(), {a, b, c, d});
  m.triangles.push_back({base, base + 1, base + 2});
  m.triangles.push_back({base, base + 2, base + 3});
  m.face_slots.insert(m.face_slots.end(), {s, s});
}

// ---------------------------------------------------------------------------
// Wavefront OBJ. Material slots map to `usemtl`; polygons are fan
// triangulated; texture and normal indices are ignored.
// ---------------------------------------------------------------------------

inline Mesh parse_obj(std::istream& is, const std::string& source = "<obj>") {
  Mesh m;
  std::uint32_t slot = 0;
  bool slot_set = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw IoError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("malformed vertex");
      m.positions.emplace_back(x, y, z);
    } else if (tag == "usemtl") {
      std::string name;
      ls >> name;
      slot = m.slot_index(name.empty() ? "default" : name);
      slot_set = true;
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        long long v = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc() || p != head.data() + head.size() || v == 0) fail("malformed face index '" + tok + "'");
        const long long n = static_cast<long long>(m.positions.size());
        const long long i = v > 0 ? v - 1 : n + v;
        if (i < 0 || i >= n) fail("face index out of range");
        idx.push_back(static_cast<std::uint32_t>(i));
      }
      if (idx.size() < 3) fail("face with fewer than three vertices");
      if (!slot_set) {
        slot = m.slot_index("default");
        slot_set = true;
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        m.face_slots.push_back(slot);
      }
    }
  }
  return m;
}

inline Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mesh " + path.string());
  return parse_obj(is, path.string());
}

// Round-trip exact: positions are printed with 17 significant digits.
inline void print_obj(std::ostream& os, const Mesh& m) {
  validate_mesh(m);
  os.precision(17);
  for (const auto& p : m.positions) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  std::size_t f = 0;
  while (f < m.triangles.size()) {
    const auto s = m.face_slots[f];
    os << "usemtl " << m.slot_names[s] << '\n';
    for (; f < m.triangles.size() && m.face_slots[f] == s; ++f) {
      const auto& t = m.triangles[f];
      os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
  }
}

inline void write_obj(const std::filesystem::path& path, const Mesh& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  print_obj(os, m);
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace panostage
