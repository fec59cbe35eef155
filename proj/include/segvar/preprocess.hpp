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

#include <array>
#include <span>
#include <vector>

#include "segvar/image.hpp"

namespace segvar {

/// Intensity window; samples at or below lo map to 0, at or above hi to 255.
struct WindowParams {
  double lo = 0.0;
  double hi = 1.0;
};

struct ClaheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  double clip_factor = 2.0;
};

/// lo = 0.9 * global minimum, hi = 0.9 * global maximum over every slice of
/// one patient. Throws DegenerateWindow when lo >= hi.
WindowParams compute_window(std::span<const GrayImage> slices);

/// round(255 * clamp((v - lo) / (hi - lo), 0, 1)), half away from zero.
GrayImage apply_window(const GrayImage& img, const WindowParams& w);

using Histogram = std::array<std::uint32_t, 256>;

/// Per-tile intermediate state, exposed for inspection and tests.
struct ClaheTile {
  int x0 = 0, y0 = 0, w = 0, h = 0;
  std::uint32_t clip_limit = 0;
  Histogram raw{};
  Histogram clipped{};       // after clipping, before redistribution
  Histogram redistributed{};
  std::array<std::uint8_t, 256> lut{};
};

/// Integer clip limit: max(1, floor(clip_factor * tile_pixels / 256)).
std::uint32_t clahe_clip_limit(double clip_factor, std::size_t tile_pixels);

/// Clips every bin to limit and returns the clipped histogram together with the
/// excess. Redistribution is separate so callers can check the clip itself.
Histogram clip_histogram(const Histogram& h, std::uint32_t limit, std::uint64_t& excess);

/// Uniform single-pass redistribution: excess / 256 to every bin, the
/// remainder one-per-bin to the lowest bins.
Histogram redistribute_excess(const Histogram& clipped, std::uint64_t excess);

std::vector<ClaheTile> clahe_tiles(const GrayImage& img, const ClaheParams& p);

/// Contrast-limited adaptive histogram equalization of an 8-bit image. Tile
/// mappings are the clipped CDF scaled to [0,255]; output pixels bilinearly
/// blend the four nearest tile mappings (edge tiles replicated).
GrayImage clahe(const GrayImage& img, const ClaheParams& p = {});

/// Shannon entropy (bits) of an 8-bit image's intensity histogram.
double entropy_bits(const GrayImage& img);

}  // namespace segvar
