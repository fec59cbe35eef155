// Copyright 2026 The segvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segvar/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace segvar {

namespace {

int depth_for_maxval(long maxval) {
  switch (maxval) {
    case 255: return 8;
    case 4095: return 12;
    case 65535: return 16;
    default: return 0;
  }
}

std::vector<char> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingArtifact, "missing artifact " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PnmHeader {
  std::string magic;
  long width = 0;
  long height = 0;
  long maxval = 0;
  std::size_t payload_offset = 0;
};

// Netpbm header: magic, then three whitespace-separated integers with '#'
// comments allowed, then exactly one whitespace byte before the payload.
PnmHeader parse_header(const std::vector<char>& buf, const std::filesystem::path& path) {
  PnmHeader h;
  if (buf.size() < 2 || buf[0] != 'P') fail(ErrorCode::Format, "bad magic number in " + path.string());
  h.magic.assign(buf.begin(), buf.begin() + 2);
  if (h.magic != "P5" && h.magic != "P6") fail(ErrorCode::Format, "bad magic number in " + path.string());

  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    for (;;) {
      while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
      if (pos < buf.size() && buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos])))
      fail(ErrorCode::Format, "malformed header in " + path.string());
    long v = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
      v = v * 10 + (buf[pos] - '0');
      if (v > 1'000'000'000L) fail(ErrorCode::Format, "header value overflow in " + path.string());
      ++pos;
    }
    return v;
  };
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
    fail(ErrorCode::Format, "truncated payload in " + path.string());
  h.payload_offset = pos + 1;
  if (h.width < 1 || h.height < 1) fail(ErrorCode::Format, "zero raster dimension in " + path.string());
  return h;
}

void write_all(const std::filesystem::path& path, const std::string& header,
               const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string header_for(const char* magic, int w, int h, long maxval) {
  std::ostringstream os;
  os << magic << '\n' << w << ' ' << h << '\n' << maxval << '\n';
  return os.str();
}

// Edge-clamped half-pixel source coordinate for bilinear sampling.
inline double src_coord(int dst, double scale, int n) {
  const double s = (dst + 0.5) * scale - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(n - 1));
}

inline int nearest_index(int dst, double scale, int n) {
  const int s = static_cast<int>(std::floor((dst + 0.5) * scale));
  return std::clamp(s, 0, n - 1);
}

template <typename Getter>
double bilinear_at(int w, int h, double sx, double sy, Getter&& get) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = get(x0, y0) * (1.0 - fx) + get(x1, y0) * fx;
  const double bottom = get(x0, y1) * (1.0 - fx) + get(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

template <typename R>
R crop_raster(const R& src, const RoiBox& box, R out) {
  require(box_inside(box, src.width(), src.height()), ErrorCode::OutOfBounds,
          "crop box exceeds raster bounds");
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x) out.at(x, y) = src.at(box.x0 + x, box.y0 + y);
  return out;
}

}  // namespace

GrayImage::GrayImage(int width, int height, int depth, std::uint16_t fill)
    : Raster<std::uint16_t>(width, height, fill), depth_(depth) {
  require(depth == 8 || depth == 12 || depth == 16, ErrorCode::InvalidArgument,
          "image depth must be 8, 12 or 16");
  require(fill <= max_value(), ErrorCode::InvalidArgument, "fill exceeds depth");
}

GrayImage::GrayImage(int width, int height, int depth, std::vector<std::uint16_t> data)
    : Raster<std::uint16_t>(width, height, std::move(data)), depth_(depth) {
  require(depth == 8 || depth == 12 || depth == 16, ErrorCode::InvalidArgument,
          "image depth must be 8, 12 or 16");
  const auto top = max_value();
  require(std::all_of(pixels().begin(), pixels().end(), [top](auto v) { return v <= top; }),
          ErrorCode::InvalidArgument, "intensity exceeds image depth");
}

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill)
    : Raster<std::uint8_t>(width, height, fill) {
  require(fill <= 1, ErrorCode::InvalidArgument, "mask values must be 0 or 1");
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> data)
    : Raster<std::uint8_t>(width, height, std::move(data)) {
  require(std::all_of(pixels().begin(), pixels().end(), [](auto v) { return v <= 1; }),
          ErrorCode::InvalidArgument, "mask values must be 0 or 1");
}

std::size_t BinaryMask::count() const noexcept {
  std::size_t n = 0;
  for (auto v : pixels()) n += v;
  return n;
}

PnmRaster load_pnm(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  const auto h = parse_header(buf, path);
  if (h.magic != "P5") fail(ErrorCode::Format, "expected P5 graymap in " + path.string());
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + h.payload_offset;
  const std::size_t avail = buf.size() - h.payload_offset;

  if (h.maxval == 1) {
    if (avail < n) fail(ErrorCode::Format, "truncated payload in " + path.string());
    std::vector<std::uint8_t> data(p, p + n);
    if (std::any_of(data.begin(), data.end(), [](auto v) { return v > 1; }))
      fail(ErrorCode::Format, "mask sample exceeds maxval 1 in " + path.string());
    return BinaryMask(static_cast<int>(h.width), static_cast<int>(h.height), std::move(data));
  }
  const int depth = depth_for_maxval(h.maxval);
  if (depth == 0)
    fail(ErrorCode::Format, "unsupported maxval " + std::to_string(h.maxval) + " in " + path.string());
  const std::size_t bytes_per = h.maxval > 255 ? 2 : 1;
  if (avail < n * bytes_per) fail(ErrorCode::Format, "truncated payload in " + path.string());
  std::vector<std::uint16_t> data(n);
  for (std::size_t i = 0; i < n; ++i)
    data[i] = bytes_per == 1 ? p[i]
                             : static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
  for (auto v : data)
    if (v > h.maxval) fail(ErrorCode::Format, "sample exceeds maxval in " + path.string());
  return GrayImage(static_cast<int>(h.width), static_cast<int>(h.height), depth, std::move(data));
}

GrayImage load_gray(const std::filesystem::path& path) {
  auto r = load_pnm(path);
  if (auto* g = std::get_if<GrayImage>(&r)) return std::move(*g);
  fail(ErrorCode::Format, "expected a grayscale image, found a mask: " + path.string());
}

BinaryMask load_mask(const std::filesystem::path& path) {
  auto r = load_pnm(path);
  if (auto* m = std::get_if<BinaryMask>(&r)) return std::move(*m);
  fail(ErrorCode::Format, "expected a mask (maxval 1): " + path.string());
}

ColorImage load_ppm(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  const auto h = parse_header(buf, path);
  if (h.magic != "P6") fail(ErrorCode::Format, "expected P6 pixmap in " + path.string());
  if (h.maxval != 255) fail(ErrorCode::Format, "unsupported pixmap maxval in " + path.string());
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (buf.size() - h.payload_offset < 3 * n)
    fail(ErrorCode::Format, "truncated payload in " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + h.payload_offset;
  std::vector<Rgb> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
  return ColorImage(static_cast<int>(h.width), static_cast<int>(h.height), std::move(data));
}

void save_pnm(const GrayImage& img, const std::filesystem::path& path) {
  const long maxval = img.max_value();
  std::vector<unsigned char> payload;
  if (img.depth() == 8) {
    payload.assign(img.pixels().begin(), img.pixels().end());
  } else {
    payload.reserve(img.size() * 2);
    for (auto v : img.pixels()) {
      payload.push_back(static_cast<unsigned char>(v >> 8));
      payload.push_back(static_cast<unsigned char>(v & 0xff));
    }
  }
  write_all(path, header_for("P5", img.width(), img.height(), maxval), payload);
}

void save_pnm(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<unsigned char> payload(mask.pixels().begin(), mask.pixels().end());
  write_all(path, header_for("P5", mask.width(), mask.height(), 1), payload);
}

void save_pnm(const ColorImage& img, const std::filesystem::path& path) {
  std::vector<unsigned char> payload;
  payload.reserve(img.size() * 3);
  for (const auto& c : img.pixels()) {
    payload.push_back(c.r);
    payload.push_back(c.g);
    payload.push_back(c.b);
  }
  write_all(path, header_for("P6", img.width(), img.height(), 255), payload);
}

GrayImage resample(const GrayImage& img, int new_w, int new_h, Interp mode) {
  require(new_w >= 1 && new_h >= 1, ErrorCode::InvalidArgument, "zero target dimension");
  require(!img.empty(), ErrorCode::InvalidArgument, "cannot resample an empty image");
  GrayImage out(new_w, new_h, img.depth());
  const double sx = static_cast<double>(img.width()) / new_w;
  const double sy = static_cast<double>(img.height()) / new_h;
  if (mode == Interp::Nearest) {
    for (int y = 0; y < new_h; ++y) {
      const int yy = nearest_index(y, sy, img.height());
      for (int x = 0; x < new_w; ++x) out.at(x, y) = img.at(nearest_index(x, sx, img.width()), yy);
    }
    return out;
  }
  auto get = [&](int x, int y) { return static_cast<double>(img.at(x, y)); };
  for (int y = 0; y < new_h; ++y) {
    const double fy = src_coord(y, sy, img.height());
    for (int x = 0; x < new_w; ++x) {
      const double v = bilinear_at(img.width(), img.height(), src_coord(x, sx, img.width()), fy, get);
      out.at(x, y) = static_cast<std::uint16_t>(
          std::clamp(std::round(v), 0.0, static_cast<double>(img.max_value())));
    }
  }
  return out;
}

BinaryMask resample_mask(const BinaryMask& mask, int new_w, int new_h) {
  require(new_w >= 1 && new_h >= 1, ErrorCode::InvalidArgument, "zero target dimension");
  require(!mask.empty(), ErrorCode::InvalidArgument, "cannot resample an empty mask");
  BinaryMask out(new_w, new_h);
  const double sx = static_cast<double>(mask.width()) / new_w;
  const double sy = static_cast<double>(mask.height()) / new_h;
  for (int y = 0; y < new_h; ++y) {
    const int yy = nearest_index(y, sy, mask.height());
    for (int x = 0; x < new_w; ++x) out.at(x, y) = mask.at(nearest_index(x, sx, mask.width()), yy);
  }
  return out;
}

ValueMap resample_values(const ValueMap& map, int new_w, int new_h) {
  require(new_w >= 1 && new_h >= 1, ErrorCode::InvalidArgument, "zero target dimension");
  ValueMap out(new_w, new_h);
  const double sx = static_cast<double>(map.width()) / new_w;
  const double sy = static_cast<double>(map.height()) / new_h;
  auto get = [&](int x, int y) { return map.at(x, y); };
  for (int y = 0; y < new_h; ++y) {
    const double fy = src_coord(y, sy, map.height());
    for (int x = 0; x < new_w; ++x)
      out.at(x, y) = bilinear_at(map.width(), map.height(), src_coord(x, sx, map.width()), fy, get);
  }
  return out;
}

bool box_inside(const RoiBox& box, int width, int height) noexcept {
  return box.w >= 1 && box.h >= 1 && box.x0 >= 0 && box.y0 >= 0 &&
         static_cast<long>(box.x0) + box.w <= width && static_cast<long>(box.y0) + box.h <= height;
}

GrayImage crop(const GrayImage& img, const RoiBox& box) {
  require(box.w >= 1 && box.h >= 1, ErrorCode::OutOfBounds, "crop box must be nonempty");
  return crop_raster(img, box, GrayImage(box.w, box.h, img.depth()));
}

BinaryMask crop(const BinaryMask& mask, const RoiBox& box) {
  require(box.w >= 1 && box.h >= 1, ErrorCode::OutOfBounds, "crop box must be nonempty");
  return crop_raster(mask, box, BinaryMask(box.w, box.h));
}

ValueMap crop(const ValueMap& map, const RoiBox& box) {
  require(box.w >= 1 && box.h >= 1, ErrorCode::OutOfBounds, "crop box must be nonempty");
  return crop_raster(map, box, ValueMap(box.w, box.h));
}

ColorImage crop(const ColorImage& img, const RoiBox& box) {
  require(box.w >= 1 && box.h >= 1, ErrorCode::OutOfBounds, "crop box must be nonempty");
  return crop_raster(img, box, ColorImage(box.w, box.h));
}

ValueMap normalized(const GrayImage& img) {
  ValueMap out(img.width(), img.height());
  const double scale = 1.0 / img.max_value();
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] * scale;
  return out;
}

ValueMap to_values(const BinaryMask& mask) {
  ValueMap out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i];
  return out;
}

}  // namespace segvar
