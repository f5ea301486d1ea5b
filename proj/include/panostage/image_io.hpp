// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ImfChannelList.h>
#include <ImfDoubleAttribute.h>
#include <ImfFrameBuffer.h>
#include <ImfHeader.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <span>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panostage/error.hpp"
#include "panostage/image.hpp"
#include "panostage/radiance.hpp"

namespace panostage {

namespace fs = std::filesystem;

inline std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// ---------------------------------------------------------------------------
// OpenEXR
// ---------------------------------------------------------------------------

inline constexpr const char* kCalibrationAttribute = "panostage.calibration_k";

struct ExrImage {
  RgbImage pixels;
  std::optional<double> calibration;
};

inline void write_exr(const fs::path& path, const RgbImage& img, std::optional<double> calibration = std::nullopt) {
  require(img.width() > 0 && img.height() > 0, "cannot write an empty EXR image");
  try {
    Imf::Header header(img.width(), img.height());
    header.compression() = Imf::ZIP_COMPRESSION;
    for (const char* name : {"R", "G", "B"}) header.channels().insert(name, Imf::Channel(Imf::FLOAT));
    if (calibration) header.insert(kCalibrationAttribute, Imf::DoubleAttribute(*calibration));
    Imf::OutputFile file(path.string().c_str(), header);
    auto* base = reinterpret_cast<char*>(const_cast<Rgb*>(img.pixels().data()));
    const std::size_t xs = sizeof(Rgb);
    const std::size_t ys = sizeof(Rgb) * static_cast<std::size_t>(img.width());
    Imf::FrameBuffer fb;
    fb.insert("R", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, r), xs, ys));
    fb.insert("G", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, g), xs, ys));
    fb.insert("B", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, b), xs, ys));
    file.setFrameBuffer(fb);
    file.writePixels(img.height());
  } catch (const std::exception& e) {
    throw IoError("failed to write EXR " + path.string() + ": " + e.what());
  }
}

inline ExrImage read_exr(const fs::path& path) {
  try {
    Imf::InputFile file(path.string().c_str());
    const Imath::Box2i dw = file.header().dataWindow();
    const int w = dw.max.x - dw.min.x + 1;
    const int h = dw.max.y - dw.min.y + 1;
    ExrImage out{RgbImage(w, h), std::nullopt};
    const auto& channels = file.header().channels();
    const bool rgb = channels.findChannel("R") || channels.findChannel("G") || channels.findChannel("B");
    auto* base = reinterpret_cast<char*>(out.pixels.pixels().data()) -
                 (static_cast<std::ptrdiff_t>(dw.min.x) + static_cast<std::ptrdiff_t>(dw.min.y) * w) *
                     static_cast<std::ptrdiff_t>(sizeof(Rgb));
    const std::size_t xs = sizeof(Rgb);
    const std::size_t ys = sizeof(Rgb) * static_cast<std::size_t>(w);
    Imf::FrameBuffer fb;
    if (rgb) {
      fb.insert("R", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, r), xs, ys));
      fb.insert("G", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, g), xs, ys));
      fb.insert("B", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, b), xs, ys));
    } else {
      fb.insert("Y", Imf::Slice(Imf::FLOAT, base + offsetof(Rgb, r), xs, ys));
    }
    file.setFrameBuffer(fb);
    file.readPixels(dw.min.y, dw.max.y);
    if (!rgb)
      for (auto& p : out.pixels.pixels()) p.g = p.b = p.r;
    if (const auto* attr = file.header().findTypedAttribute<Imf::DoubleAttribute>(kCalibrationAttribute))
      out.calibration = attr->value();
    return out;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("failed to read EXR " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Radiance RGBE (.hdr)
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<std::uint8_t, 4> float_to_rgbe(const Rgb& c) {
  const float v = std::max({c.r, c.g, c.b});
  if (v < 1e-32f) return {0, 0, 0, 0};
  int e = 0;
  const float m = std::frexp(v, &e) * 256.0f / v;
  return {static_cast<std::uint8_t>(c.r * m), static_cast<std::uint8_t>(c.g * m), static_cast<std::uint8_t>(c.b * m),
          static_cast<std::uint8_t>(e + 128)};
}

inline Rgb rgbe_to_float(const std::uint8_t* p) {
  if (p[3] == 0) return {};
  const float f = std::ldexp(1.0f, static_cast<int>(p[3]) - (128 + 8));
  return {(p[0] + 0.5f) * f, (p[1] + 0.5f) * f, (p[2] + 0.5f) * f};
}

}  // namespace detail

inline void write_rgbe(const fs::path& path, const RgbImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height() << " +X " << img.width() << "\n";
  std::vector<std::uint8_t> line(static_cast<std::size_t>(img.width()) * 4);
  for (int y = 0; y < img.height(); ++y) {
    auto row = img.row(y);
    for (std::size_t x = 0; x < row.size(); ++x) {
      const auto e = detail::float_to_rgbe(row[x]);
      std::copy(e.begin(), e.end(), line.begin() + static_cast<std::ptrdiff_t>(x * 4));
    }
    os.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(line.size()));
  }
  if (!os) throw IoError("failed writing " + path.string());
}

inline RgbImage read_rgbe(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("#?", 0) != 0) throw IoError(path.string() + ": not a Radiance HDR file");
  while (std::getline(is, line) && !line.empty()) {
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
      throw IoError(path.string() + ": unsupported format " + line);
  }
  std::getline(is, line);
  int w = 0, h = 0;
  char ysign = 0, xsign = 0, yaxis = 0, xaxis = 0;
  std::istringstream res(line);
  res >> ysign >> yaxis >> h >> xsign >> xaxis >> w;
  if (!res || ysign != '-' || yaxis != 'Y' || xsign != '+' || xaxis != 'X' || w <= 0 || h <= 0)
    throw IoError(path.string() + ": unsupported resolution line '" + line + "'");

  RgbImage out(w, h);
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(w) * 4);
  auto get = [&]() {
    const int c = is.get();
    if (c == EOF) throw IoError(path.string() + ": truncated pixel data");
    return static_cast<std::uint8_t>(c);
  };
  for (int y = 0; y < h; ++y) {
    std::uint8_t head[4];
    for (auto& b : head) b = get();
    const bool rle = w >= 8 && w < 0x8000 && head[0] == 2 && head[1] == 2 && !(head[2] & 0x80);
    if (!rle) {
      std::copy(head, head + 4, scan.begin());
      for (std::size_t i = 4; i < scan.size(); ++i) scan[i] = get();
    } else {
      if (((head[2] << 8) | head[3]) != w) throw IoError(path.string() + ": scanline width mismatch");
      std::vector<std::uint8_t> planes(static_cast<std::size_t>(w) * 4);
      for (int c = 0; c < 4; ++c) {
        std::uint8_t* plane = planes.data() + static_cast<std::size_t>(c) * w;
        int x = 0;
        while (x < w) {
          int count = get();
          if (count > 128) {
            count -= 128;
            if (x + count > w) throw IoError(path.string() + ": bad RLE run");
            const std::uint8_t v = get();
            std::fill(plane + x, plane + x + count, v);
          } else {
            if (count == 0 || x + count > w) throw IoError(path.string() + ": bad RLE dump");
            for (int i = 0; i < count; ++i) plane[x + i] = get();
          }
          x += count;
        }
      }
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 4; ++c) scan[static_cast<std::size_t>(x) * 4 + c] = planes[static_cast<std::size_t>(c) * w + x];
    }
    for (int x = 0; x < w; ++x) out(x, y) = detail::rgbe_to_float(scan.data() + static_cast<std::size_t>(x) * 4);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNG (8/16-bit). Code values are normalized to [0, 1] without any transfer
// curve; the capture pipeline treats decoded values as linear.
// ---------------------------------------------------------------------------

inline RgbImage read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw IoError("failed to read PNG " + path.string() + ": " + image.message);
  const bool sixteen = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  image.format = sixteen ? PNG_FORMAT_LINEAR_RGB_ALPHA : PNG_FORMAT_RGBA;
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  RgbImage out(w, h);
  if (sixteen) {
    std::vector<std::uint16_t> buf(PNG_IMAGE_SIZE(image) / 2);
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
      throw IoError("failed to decode PNG " + path.string() + ": " + image.message);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.pixels()[i] = Rgb(buf[4 * i] / 65535.0f, buf[4 * i + 1] / 65535.0f, buf[4 * i + 2] / 65535.0f);
  } else {
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
      throw IoError("failed to decode PNG " + path.string() + ": " + image.message);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.pixels()[i] = Rgb(buf[4 * i] / 255.0f, buf[4 * i + 1] / 255.0f, buf[4 * i + 2] / 255.0f);
  }
  return out;
}

// 8-bit RGB buffer (row-major, 3 bytes per pixel).
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;
};

inline Rgb8Image quantize_8bit(const RgbImage& img) {
  Rgb8Image out{img.width(), img.height(), std::vector<std::uint8_t>(img.size() * 3)};
  auto q = [](float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); };
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Rgb& p = img.pixels()[i];
    out.bytes[3 * i] = q(p.r);
    out.bytes[3 * i + 1] = q(p.g);
    out.bytes[3 * i + 2] = q(p.b);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_png(const Rgb8Image& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, img.bytes.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.bytes.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

inline void write_binary(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

inline std::vector<std::uint8_t> read_binary(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

// Display-only tone mapping: a global exposure maps the 95th-percentile
// luminance to 0.9, followed by a 1/2.2 gamma.
inline RgbImage tone_map(const RgbImage& img) {
  std::vector<double> lum;
  lum.reserve(img.size());
  for (const auto& p : img.pixels()) lum.push_back(luminance(p) / kLuminousEfficacy);
  double exposure = 1.0;
  if (!lum.empty()) {
    const auto k = static_cast<std::size_t>(std::floor(0.95 * static_cast<double>(lum.size() - 1)));
    std::nth_element(lum.begin(), lum.begin() + static_cast<std::ptrdiff_t>(k), lum.end());
    if (lum[k] > 0 && std::isfinite(lum[k])) exposure = 0.9 / lum[k];
  }
  RgbImage out(img.width(), img.height());
  auto map = [&](float v) {
    return static_cast<float>(std::pow(std::clamp(static_cast<double>(v) * exposure, 0.0, 1.0), 1.0 / 2.2));
  };
  for (std::size_t i = 0; i < img.size(); ++i) {
    const Rgb& p = img.pixels()[i];
    out.pixels()[i] = Rgb(map(p.r), map(p.g), map(p.b));
  }
  return out;
}

inline std::vector<std::uint8_t> encode_preview_png(const RgbImage& hdr) { return encode_png(quantize_8bit(tone_map(hdr))); }

// ---------------------------------------------------------------------------
// Extension-dispatched helpers
// ---------------------------------------------------------------------------

inline RgbImage load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  const auto ext = lower_extension(path);
  if (ext == ".exr") return read_exr(path).pixels;
  if (ext == ".hdr" || ext == ".pic") return read_rgbe(path);
  if (ext == ".png") return read_png(path);
  throw IoError("unsupported image format: " + path.string());
}

// .exr and .hdr keep linear values; .png is a tone-mapped 8-bit preview.
inline void save_image(const fs::path& path, const RgbImage& img) {
  const auto ext = lower_extension(path);
  if (ext == ".exr") return write_exr(path, img);
  if (ext == ".hdr" || ext == ".pic") return write_rgbe(path, img);
  if (ext == ".png") return write_binary(path, encode_preview_png(img));
  throw IoError("unsupported output format: " + path.string());
}

inline HdrPanorama load_panorama(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  if (lower_extension(path) == ".exr") {
    auto exr = read_exr(path);
    return HdrPanorama(std::move(exr.pixels), exr.calibration);
  }
  return HdrPanorama(load_image(path));
}

inline void save_panorama(const fs::path& path, const HdrPanorama& pano) {
  if (lower_extension(path) == ".exr") return write_exr(path, pano.pixels(), pano.calibration());
  save_image(path, pano.pixels());
}

// Width and height without decoding pixel data where the format allows.
inline std::pair<int, int> image_dimensions(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  const auto ext = lower_extension(path);
  if (ext == ".exr") {
    try {
      Imf::InputFile file(path.string().c_str());
      const Imath::Box2i dw = file.header().dataWindow();
      return {dw.max.x - dw.min.x + 1, dw.max.y - dw.min.y + 1};
    } catch (const std::exception& e) {
      throw IoError("failed to read EXR header " + path.string() + ": " + e.what());
    }
  }
  if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
      throw IoError("failed to read PNG " + path.string() + ": " + image.message);
    std::pair<int, int> dims{static_cast<int>(image.width), static_cast<int>(image.height)};
    png_image_free(&image);
    return dims;
  }
  const RgbImage img = load_image(path);
  return {img.width(), img.height()};
}

// Sidecar: {"frames":[{"path": "...", "exposure_s": 0.01}, ...]}. Paths are
// relative to the sidecar's directory.
inline ExposureBracket load_bracket(const fs::path& sidecar) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed bracket sidecar " + sidecar.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("frames") || !j["frames"].is_array())
    throw ValidationError("bracket sidecar needs a \"frames\" array");
  ExposureBracket bracket;
  for (const auto& f : j["frames"]) {
    if (!f.is_object() || !f.contains("path") || !f.contains("exposure_s") || !f["path"].is_string() ||
        !f["exposure_s"].is_number())
      throw ValidationError("each bracket frame needs \"path\" and \"exposure_s\"");
    bracket.frames.push_back({load_image(sidecar.parent_path() / f["path"].get<std::string>()), f["exposure_s"].get<double>()});
  }
  validate_bracket(bracket);
  return bracket;
}

}  // namespace panostage
