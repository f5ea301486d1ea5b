// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panostage/csv.hpp"
#include "panostage/error.hpp"
#include "panostage/image_io.hpp"
#include "panostage/layout_io.hpp"
#include "panostage/photometry.hpp"

namespace panostage {

struct SceneEntry {
  std::string scene_id;
  std::string indoor_path;
  std::string outdoor_path;
  PhotometricRecord record;
  std::string timestamp;                         // ISO 8601, kept verbatim
  std::optional<std::string> outdoor_timestamp;  // capture time of the outdoor shot

  friend bool operator==(const SceneEntry& a, const SceneEntry& b) {
    return a.scene_id == b.scene_id && a.indoor_path == b.indoor_path && a.outdoor_path == b.outdoor_path &&
           a.record.indoor_illuminance_lux == b.record.indoor_illuminance_lux &&
           a.record.outdoor_illuminance_lux == b.record.outdoor_illuminance_lux &&
           a.record.target_luminance_cdm2 == b.record.target_luminance_cdm2 &&
           a.record.room_orientation_deg == b.record.room_orientation_deg && a.timestamp == b.timestamp &&
           a.outdoor_timestamp == b.outdoor_timestamp;
  }
};

struct ManifestDiagnostic {
  std::size_t row = 0;  // 1-based data row (CSV) or array index + 1 (JSON)
  std::string scene_id;
  std::string reason;
};

struct ManifestOptions {
  bool check_files = false;     // require both panoramas to exist with w = 2h
  double pair_window_s = 600;   // max indoor/outdoor capture gap
};

struct Manifest {
  std::vector<SceneEntry> entries;
  std::vector<ManifestDiagnostic> rejected;
  std::vector<std::string> warnings;
};

inline const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols{"scene_id", "indoor_path", "outdoor_path", "E_in_lux", "E_out_lux",
                                             "L_tgt_cdm2", "orientation_deg", "timestamp_iso8601"};
  return cols;
}
inline constexpr const char* kOutdoorTimestampColumn = "outdoor_timestamp_iso8601";

// Seconds since the Unix epoch for "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM]".
// A missing zone is read as UTC.
inline double parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, consumed = 0;
  double sec = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
    throw ValidationError("malformed ISO 8601 timestamp '" + s + "'");
  namespace chr = std::chrono;
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)}, chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec < 0 || sec >= 61) throw ValidationError("invalid date or time in '" + s + "'");
  const std::string zone = s.substr(static_cast<std::size_t>(consumed));
  double offset = 0;
  if (!zone.empty() && zone != "Z") {
    int zh = 0, zm = 0;
    char sign = 0;
    if (std::sscanf(zone.c_str(), "%c%2d:%2d", &sign, &zh, &zm) != 3 || (sign != '+' && sign != '-') || zone.size() != 6)
      throw ValidationError("malformed time zone in '" + s + "'");
    offset = (sign == '+' ? 1 : -1) * (zh * 3600.0 + zm * 60.0);
  }
  const auto days = chr::sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec - offset;
}

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_number(const std::string& field, const std::string& column) {
  const std::string t = csv::trim(field);
  double v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ValidationError(column + ": '" + field + "' is not a number");
  return v;
}

// Validates one entry; files are resolved against `base`.
inline void validate_entry(const SceneEntry& e, const fs::path& base, const ManifestOptions& opts) {
  require(!e.scene_id.empty(), "scene_id is empty");
  require(!e.indoor_path.empty() && !e.outdoor_path.empty(), "panorama paths must be non-empty");
  validate_record(e.record);
  const double t_in = parse_iso8601(e.timestamp);
  if (e.outdoor_timestamp) {
    const double gap = parse_iso8601(*e.outdoor_timestamp) - t_in;
    require(std::abs(gap) <= opts.pair_window_s, "indoor/outdoor capture times differ by more than the pair window");
  }
  if (!opts.check_files) return;
  for (const auto& p : {e.indoor_path, e.outdoor_path}) {
    const fs::path full = fs::path(p).is_absolute() ? fs::path(p) : base / p;
    if (!fs::exists(full)) throw ValidationError("missing panorama " + full.string());
    const auto [w, h] = image_dimensions(full);
    require(w == 2 * h, "panorama " + full.string() + " is not 2:1");
  }
}

namespace detail {

inline void admit(Manifest& m, SceneEntry e, std::size_t row, const fs::path& base, const ManifestOptions& opts) {
  try {
    validate_entry(e, base, opts);
    if (std::any_of(m.entries.begin(), m.entries.end(), [&](const SceneEntry& x) { return x.scene_id == e.scene_id; }))
      throw ValidationError("duplicate scene_id");
    m.entries.push_back(std::move(e));
  } catch (const Error& err) {
    m.rejected.push_back({row, e.scene_id, err.what()});
  }
}

}  // namespace detail

inline Manifest parse_manifest_csv(std::istream& is, const fs::path& base, const ManifestOptions& opts = {}) {
  Manifest m;
  std::string line;
  if (!std::getline(is, line) || csv::trim(line).empty()) {
    m.warnings.push_back("manifest is empty");
    return m;
  }
  const auto header = csv::split_record(line);
  std::vector<int> col(manifest_columns().size(), -1);
  int outdoor_ts = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = csv::trim(header[i]);
    const auto it = std::find(manifest_columns().begin(), manifest_columns().end(), name);
    if (it != manifest_columns().end()) col[static_cast<std::size_t>(it - manifest_columns().begin())] = static_cast<int>(i);
    else if (name == kOutdoorTimestampColumn) outdoor_ts = static_cast<int>(i);
    else throw ValidationError("manifest: unknown column '" + name + "'");
  }
  for (std::size_t c = 0; c < col.size(); ++c)
    if (col[c] < 0) throw ValidationError("manifest: missing column '" + manifest_columns()[c] + "'");

  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (csv::trim(line).empty() || line == "\r") continue;
    ++row;
    SceneEntry e;
    try {
      const auto f = csv::split_record(line);
      if (f.size() != header.size()) throw ValidationError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
      auto at = [&](std::size_t c) { return f[static_cast<std::size_t>(col[c])]; };
      e.scene_id = csv::trim(at(0));
      e.indoor_path = at(1);
      e.outdoor_path = at(2);
      e.record.indoor_illuminance_lux = parse_number(at(3), "E_in_lux");
      e.record.outdoor_illuminance_lux = parse_number(at(4), "E_out_lux");
      e.record.target_luminance_cdm2 = parse_number(at(5), "L_tgt_cdm2");
      e.record.room_orientation_deg = parse_number(at(6), "orientation_deg");
      e.timestamp = csv::trim(at(7));
      if (outdoor_ts >= 0 && !csv::trim(f[static_cast<std::size_t>(outdoor_ts)]).empty())
        e.outdoor_timestamp = csv::trim(f[static_cast<std::size_t>(outdoor_ts)]);
    } catch (const Error& err) {
      m.rejected.push_back({row, e.scene_id, err.what()});
      continue;
    }
    detail::admit(m, std::move(e), row, base, opts);
  }
  if (row == 0) m.warnings.push_back("manifest has no rows");
  return m;
}

inline json entry_to_json(const SceneEntry& e) {
  json j = {{"scene_id", e.scene_id},
            {"indoor_path", e.indoor_path},
            {"outdoor_path", e.outdoor_path},
            {"E_in_lux", e.record.indoor_illuminance_lux},
            {"E_out_lux", e.record.outdoor_illuminance_lux},
            {"L_tgt_cdm2", e.record.target_luminance_cdm2},
            {"orientation_deg", e.record.room_orientation_deg},
            {"timestamp_iso8601", e.timestamp}};
  if (e.outdoor_timestamp) j[kOutdoorTimestampColumn] = *e.outdoor_timestamp;
  return j;
}

// {"scenes":[{...same keys as the CSV columns...}]}
inline Manifest parse_manifest_json(const json& j, const fs::path& base, const ManifestOptions& opts = {}) {
  Manifest m;
  if (!j.is_object() || !j.contains("scenes") || !j["scenes"].is_array())
    throw ValidationError("manifest JSON must be an object with a \"scenes\" array");
  detail::reject_unknown_keys(j, {"scenes"}, "manifest");
  std::size_t row = 0;
  for (const auto& s : j["scenes"]) {
    ++row;
    SceneEntry e;
    try {
      const std::string what = "scene " + std::to_string(row);
      if (!s.is_object()) throw ValidationError(what + " is not an object");
      detail::reject_unknown_keys(s, {"scene_id", "indoor_path", "outdoor_path", "E_in_lux", "E_out_lux", "L_tgt_cdm2",
                                      "orientation_deg", "timestamp_iso8601", kOutdoorTimestampColumn}, what);
      e.scene_id = detail::get_field<std::string>(s, "scene_id", what);
      e.indoor_path = detail::get_field<std::string>(s, "indoor_path", what);
      e.outdoor_path = detail::get_field<std::string>(s, "outdoor_path", what);
      e.record.indoor_illuminance_lux = detail::get_field<double>(s, "E_in_lux", what);
      e.record.outdoor_illuminance_lux = detail::get_field<double>(s, "E_out_lux", what);
      e.record.target_luminance_cdm2 = detail::get_field<double>(s, "L_tgt_cdm2", what);
      e.record.room_orientation_deg = detail::get_field<double>(s, "orientation_deg", what);
      e.timestamp = detail::get_field<std::string>(s, "timestamp_iso8601", what);
      if (s.contains(kOutdoorTimestampColumn)) e.outdoor_timestamp = detail::get_field<std::string>(s, kOutdoorTimestampColumn, what);
    } catch (const Error& err) {
      m.rejected.push_back({row, e.scene_id, err.what()});
      continue;
    }
    detail::admit(m, std::move(e), row, base, opts);
  }
  if (row == 0) m.warnings.push_back("manifest has no rows");
  return m;
}

inline Manifest load_manifest(const fs::path& path, const ManifestOptions& opts = {}) {
  const fs::path base = path.parent_path();
  if (lower_extension(path) == ".json") {
    const std::string text = read_text(path);
    if (csv::trim(text).empty()) return Manifest{{}, {}, {"manifest is empty"}};
    return parse_manifest_json(detail::parse_json_text(text, path.string()), base, opts);
  }
  std::istringstream is(read_text(path));
  return parse_manifest_csv(is, base, opts);
}

inline void write_manifest_csv(std::ostream& os, std::span<const SceneEntry> entries) {
  const bool with_outdoor = std::any_of(entries.begin(), entries.end(), [](const SceneEntry& e) { return e.outdoor_timestamp.has_value(); });
  for (std::size_t c = 0; c < manifest_columns().size(); ++c) os << (c ? "," : "") << manifest_columns()[c];
  if (with_outdoor) os << ',' << kOutdoorTimestampColumn;
  os << '\n';
  for (const auto& e : entries) {
    os << csv::escape(e.scene_id) << ',' << csv::escape(e.indoor_path) << ',' << csv::escape(e.outdoor_path) << ','
       << format_number(e.record.indoor_illuminance_lux) << ',' << format_number(e.record.outdoor_illuminance_lux) << ','
       << format_number(e.record.target_luminance_cdm2) << ',' << format_number(e.record.room_orientation_deg) << ','
       << csv::escape(e.timestamp);
    if (with_outdoor) os << ',' << csv::escape(e.outdoor_timestamp.value_or(""));
    os << '\n';
  }
}

inline void save_manifest(const fs::path& path, std::span<const SceneEntry> entries) {
  if (lower_extension(path) == ".json") {
    json scenes = json::array();
    for (const auto& e : entries) scenes.push_back(entry_to_json(e));
    write_text(path, json{{"scenes", scenes}}.dump(2) + "\n");
    return;
  }
  std::ostringstream os;
  write_manifest_csv(os, entries);
  write_text(path, os.str());
}

struct DatasetStats {
  ErrorStats stats;
  std::vector<StatsRow> series;  // sorted by scene_id
};

// Error statistics of low-cost luminance estimates (parallel to `entries`)
// against each entry's target luminance.
inline DatasetStats dataset_stats(std::span<const SceneEntry> entries, std::span<const double> estimates) {
  if (entries.empty()) throw ValidationError("dataset_stats: no entries");
  require(entries.size() == estimates.size(), "dataset_stats: one estimate per entry is required");
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (entries[a].scene_id != entries[b].scene_id) return entries[a].scene_id < entries[b].scene_id;
    return std::pair(estimates[a], entries[a].record.target_luminance_cdm2) < std::pair(estimates[b], entries[b].record.target_luminance_cdm2);
  });
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i : order) pairs.emplace_back(estimates[i], entries[i].record.target_luminance_cdm2);
  DatasetStats out;
  out.stats = error_stats(pairs);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& e = entries[order[k]];
    const auto& s = out.stats.entries[k];
    out.series.push_back({e.scene_id, e.record.indoor_illuminance_lux, s.target, s.estimate, s.absolute_error, s.percent_error});
  }
  return out;
}

}  // namespace panostage
