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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "segvar/error.hpp"

namespace segvar {

/// Row-major 2-D raster. A default-constructed raster is 0x0 and only valid
/// as a placeholder; every constructor taking dimensions requires w, h >= 1.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument,
            "raster dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument,
            "raster dimensions must be >= 1");
    require(data_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
            ErrorCode::ShapeMismatch, "raster data length does not match width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Scalar intensity image with 8, 12 or 16 bits per sample.
class GrayImage : public Raster<std::uint16_t> {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, int depth, std::uint16_t fill = 0);
  GrayImage(int width, int height, int depth, std::vector<std::uint16_t> data);

  int depth() const noexcept { return depth_; }
  std::uint16_t max_value() const noexcept {
    return static_cast<std::uint16_t>((1u << depth_) - 1u);
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int depth_ = 8;
};

/// {0,1} raster: ground truth, thresholded predictions, ROI indicators, bias maps.
class BinaryMask : public Raster<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, std::uint8_t fill = 0);
  BinaryMask(int width, int height, std::vector<std::uint8_t> data);

  std::size_t count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Real-valued raster; values in [0,1] by convention (variance, expected loss,
/// network probabilities).
using ValueMap = Raster<double>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using ColorImage = Raster<Rgb>;

struct RoiBox {
  int x0 = 0;
  int y0 = 0;
  int w = 1;
  int h = 1;
  friend bool operator==(const RoiBox&, const RoiBox&) = default;
};

enum class Interp { Bilinear, Nearest };

using PnmRaster = std::variant<GrayImage, BinaryMask>;

/// Reads binary PGM (P5). maxval 1 yields a BinaryMask; 255/4095/65535 yield a
/// GrayImage of depth 8/12/16. Two-byte samples are big-endian.
PnmRaster load_pnm(const std::filesystem::path& path);
GrayImage load_gray(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);
/// Reads binary PPM (P6, maxval 255).
ColorImage load_ppm(const std::filesystem::path& path);

void save_pnm(const GrayImage& img, const std::filesystem::path& path);
void save_pnm(const BinaryMask& mask, const std::filesystem::path& path);
void save_pnm(const ColorImage& img, const std::filesystem::path& path);

/// Bilinear: src = (dst + 0.5) * in/out - 0.5, clamped to the edge, rounded
/// half away from zero. Nearest: floor((dst + 0.5) * in/out).
GrayImage resample(const GrayImage& img, int new_w, int new_h, Interp mode);
BinaryMask resample_mask(const BinaryMask& mask, int new_w, int new_h);
/// Bilinear resampling of real-valued maps (no rounding).
ValueMap resample_values(const ValueMap& map, int new_w, int new_h);

bool box_inside(const RoiBox& box, int width, int height) noexcept;

GrayImage crop(const GrayImage& img, const RoiBox& box);
BinaryMask crop(const BinaryMask& mask, const RoiBox& box);
ValueMap crop(const ValueMap& map, const RoiBox& box);
ColorImage crop(const ColorImage& img, const RoiBox& box);

/// Maps an image to [0,1] doubles by dividing by its maximum representable value.
ValueMap normalized(const GrayImage& img);
/// Mask as 0.0 / 1.0 values.
ValueMap to_values(const BinaryMask& mask);

}  // namespace segvar
