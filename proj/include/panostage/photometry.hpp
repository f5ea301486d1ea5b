// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panostage/csv.hpp"
#include "panostage/error.hpp"
#include "panostage/parallel.hpp"
#include "panostage/projection.hpp"
#include "panostage/radiance.hpp"

namespace panostage {

struct PhotometricRecord {
  double indoor_illuminance_lux = 0;
  double outdoor_illuminance_lux = 0;
  double target_luminance_cdm2 = 0;  // whiteboard, read with a spot luminance meter
  double room_orientation_deg = 0;   // compass bearing, [0, 360)
};

inline void validate_record(const PhotometricRecord& r) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0; };
  require(ok(r.indoor_illuminance_lux), "indoor illuminance must be finite and nonnegative");
  require(ok(r.outdoor_illuminance_lux), "outdoor illuminance must be finite and nonnegative");
  require(ok(r.target_luminance_cdm2), "target luminance must be finite and nonnegative");
  require(std::isfinite(r.room_orientation_deg) && r.room_orientation_deg >= 0 && r.room_orientation_deg < 360,
          "room orientation must lie in [0, 360) degrees");
}

struct CalibrationResult {
  double k = 1;
  double uniform_luminance = 0;    // cd/m^2
  double mean_disk_luminance = 0;  // displayed, before calibration
  double illuminance_used = 0;     // lux
};

namespace detail {

// Neumaier-compensated row sums combined pairwise; bit-stable for any
// thread count because each row is reduced serially.
template <typename RowFn>
double deterministic_sum(int rows, RowFn&& row_sum) {
  std::vector<double> partial(static_cast<std::size_t>(rows), 0.0);
  parallel_for(rows, [&](int y) { partial[static_cast<std::size_t>(y)] = row_sum(y); });
  return pairwise_sum(std::span<const double>(partial));
}

struct NeumaierSum {
  double sum = 0, carry = 0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace detail

inline double mean_disk_luminance(const OrthographicFisheye& f) {
  const int side = f.side();
  if (side == 0) throw ValidationError("fisheye has no valid disk pixels");
  const LuminanceMap lum = luminance_map(f.pixels());
  const long long count = f.disk_pixel_count();
  if (count == 0) throw ValidationError("fisheye has no valid disk pixels");
  const double total = detail::deterministic_sum(side, [&](int y) {
    detail::NeumaierSum s;
    for (int x = 0; x < side; ++x)
      if (f.is_valid(x, y)) s.add(lum(x, y));
    return s.value();
  });
  return total / static_cast<double>(count);
}

// Horizontal illuminance (lux) over the fisheye hemisphere: pi times the
// mean in-disk luminance, the discrete form of the cosine-weighted
// hemispherical luminance integral under the orthographic mapping.
inline double illuminance_from_fisheye(const OrthographicFisheye& f) { return kPi * mean_disk_luminance(f); }

inline double uniform_luminance(double illuminance_lux) {
  if (!std::isfinite(illuminance_lux) || illuminance_lux < 0)
    throw ValidationError("illuminance must be finite and nonnegative");
  return illuminance_lux / kPi;
}

inline CalibrationResult calibration_factor(double measured_lux, const OrthographicFisheye& f) {
  if (!std::isfinite(measured_lux) || measured_lux <= 0)
    throw ValidationError("measured illuminance must be positive");
  CalibrationResult r;
  r.illuminance_used = measured_lux;
  r.uniform_luminance = uniform_luminance(measured_lux);
  r.mean_disk_luminance = mean_disk_luminance(f);
  if (!(r.mean_disk_luminance > 0))
    throw NumericError("mean disk luminance is zero: capture is unusable for calibration");
  r.k = r.uniform_luminance / r.mean_disk_luminance;
  if (!std::isfinite(r.k) || r.k <= 0) throw NumericError("calibration factor is not finite");
  return r;
}

struct CalibrationOptions {
  int fisheye_side = 0;  // 0: use the panorama height
};

inline OrthographicFisheye front_fisheye(const HdrPanorama& pano, const CalibrationOptions& opts = {}) {
  const int side = opts.fisheye_side > 0 ? opts.fisheye_side : pano.height();
  return equirect_to_orthographic(crop_front_hemisphere(pano), side);
}

// Full single-panorama pipeline: crop, fisheye, luminance, factor.
inline CalibrationResult compute_calibration(const HdrPanorama& pano, double measured_lux,
                                             const CalibrationOptions& opts = {}) {
  return calibration_factor(measured_lux, front_fisheye(pano, opts));
}

struct CalibratedPair {
  HdrPanorama indoor;
  HdrPanorama outdoor;
  CalibrationResult result;
};

// The indoor measurement determines k; the outdoor capture shares camera
// settings and receives the same factor.
inline CalibratedPair calibrate_pair(const HdrPanorama& indoor, const HdrPanorama& outdoor, double measured_lux,
                                     const CalibrationOptions& opts = {}) {
  const CalibrationResult r = compute_calibration(indoor, measured_lux, opts);
  return {scale_radiance(indoor, r.k), scale_radiance(outdoor, r.k), r};
}

struct PixelRect {
  int x = 0, y = 0, width = 0, height = 0;
};

// Mean luminance over a pixel rectangle, e.g. a whiteboard patch.
inline double patch_luminance(const HdrPanorama& pano, const PixelRect& rect) {
  require(rect.width > 0 && rect.height > 0 && rect.x >= 0 && rect.y >= 0 && rect.x + rect.width <= pano.width() &&
              rect.y + rect.height <= pano.height(),
          "patch rectangle out of range");
  detail::NeumaierSum s;
  for (int y = rect.y; y < rect.y + rect.height; ++y)
    for (int x = rect.x; x < rect.x + rect.width; ++x) s.add(luminance(pano(x, y)));
  return s.value() / (static_cast<double>(rect.width) * rect.height);
}

struct ErrorEntry {
  double estimate = 0;  // cd/m^2 from the low-cost calibration
  double target = 0;    // cd/m^2 from the standard meter
  double absolute_error = 0;
  std::optional<double> percent_error;  // only when target > 0
};

struct ErrorStats {
  std::vector<ErrorEntry> entries;
  double mean_absolute_error = 0;
};

// Percent error relative to the standard-meter target.
inline std::optional<double> percent_error(double estimate, double target) {
  if (!(target > 0)) return std::nullopt;
  return 100.0 * std::abs(estimate / target - 1.0);
}

inline ErrorStats error_stats(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw ValidationError("error_stats: no estimates");
  ErrorStats stats;
  std::vector<double> abs_errors;
  for (const auto& [est, tgt] : pairs) {
    require(std::isfinite(est) && std::isfinite(tgt) && est >= 0 && tgt >= 0,
            "luminance values must be finite and nonnegative");
    ErrorEntry e{est, tgt, std::abs(est - tgt), percent_error(est, tgt)};
    abs_errors.push_back(e.absolute_error);
    stats.entries.push_back(e);
  }
  // Sorted summation makes the aggregate independent of input order.
  std::sort(abs_errors.begin(), abs_errors.end());
  detail::NeumaierSum s;
  for (double v : abs_errors) s.add(v);
  stats.mean_absolute_error = s.value() / static_cast<double>(abs_errors.size());
  return stats;
}

struct StatsRow {
  std::string scene_id;
  double measured_lux = 0;
  double standard_luminance = 0;
  double lowcost_luminance = 0;
  double absolute_error = 0;
  std::optional<double> percent_error;
};

inline void write_stats_csv(std::ostream& os, std::span<const StatsRow> rows) {
  os << "scene_id,E_measured_lux,L_std_cdm2,L_lowcost_cdm2,abs_err_cdm2,pct_err\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << csv::escape(r.scene_id) << ',' << r.measured_lux << ',' << r.standard_luminance << ',' << r.lowcost_luminance << ','
       << r.absolute_error << ',';
    if (r.percent_error) os << *r.percent_error;
    os << '\n';
  }
}

}  // namespace panostage
