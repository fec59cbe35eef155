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

#include <optional>
#include <span>
#include <vector>

#include "segvar/image.hpp"

namespace segvar {

inline constexpr Rgb kRampLow{0, 128, 0};     // green
inline constexpr Rgb kRampHigh{255, 255, 0};  // yellow
inline constexpr Rgb kTumorColor{255, 0, 0};
inline constexpr Rgb kRectumColor{255, 255, 0};

/// Linear green-to-yellow ramp, v clamped to [0,1], channels rounded.
Rgb ramp(double v) noexcept;

/// Base image as gray replicated across channels (8-bit scaled from any depth).
ColorImage gray_to_color(const GrayImage& base);

struct RenderSpec {
  GrayImage base;
  ValueMap values;  // a mask renders as its 0/1 values
  double alpha = 0.5;
  std::optional<RoiBox> crop;
};

/// color = (1 - alpha) * gray + alpha * ramp(v), rounded per channel.
ColorImage render_map(const RenderSpec& spec);

struct Contour {
  const BinaryMask* mask = nullptr;
  Rgb color;
};

/// Paints mask pixels with at least one 4-neighbour outside the mask (the
/// image border counts as outside).
ColorImage render_contours(const ColorImage& base, std::span<const Contour> contours);

/// Tiles equally sized rasters row-major into a grid with `gap` black pixels.
ColorImage montage(std::span<const ColorImage> tiles, int columns, int gap = 1);

}  // namespace segvar
