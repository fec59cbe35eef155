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

#include "segvar/render.hpp"

#include <algorithm>
#include <cmath>

namespace segvar {

namespace {
inline std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

inline double gray8(const GrayImage& img, std::size_t i) {
  return img.depth() == 8 ? img[i] : img[i] * 255.0 / img.max_value();
}
}  // namespace

Rgb ramp(double v) noexcept {
  const double t = std::clamp(v, 0.0, 1.0);
  auto lerp = [t](std::uint8_t a, std::uint8_t b) { return channel(a + (b - a) * t); };
  return {lerp(kRampLow.r, kRampHigh.r), lerp(kRampLow.g, kRampHigh.g), lerp(kRampLow.b, kRampHigh.b)};
}

ColorImage gray_to_color(const GrayImage& base) {
  ColorImage out(base.width(), base.height());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto g = channel(gray8(base, i));
    out[i] = {g, g, g};
  }
  return out;
}

ColorImage render_map(const RenderSpec& spec) {
  require(spec.alpha >= 0.0 && spec.alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must be in [0,1]");
  GrayImage base = spec.base;
  ValueMap values = spec.values;
  if (spec.crop) {
    base = crop(base, *spec.crop);
    if (!values.same_shape(base)) values = crop(values, *spec.crop);
  }
  require(values.same_shape(base), ErrorCode::ShapeMismatch, "render_map: map and base resolutions differ");
  ColorImage out(base.width(), base.height());
  const double a = spec.alpha;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double g = gray8(base, i);
    const Rgb r = ramp(values[i]);
    out[i] = {channel((1 - a) * g + a * r.r), channel((1 - a) * g + a * r.g), channel((1 - a) * g + a * r.b)};
  }
  return out;
}

ColorImage render_contours(const ColorImage& base, std::span<const Contour> contours) {
  ColorImage out = base;
  for (const auto& c : contours) {
    require(c.mask != nullptr, ErrorCode::InvalidArgument, "contour without a mask");
    const BinaryMask& m = *c.mask;
    require(m.same_shape(base), ErrorCode::ShapeMismatch, "render_contours: mask and base resolutions differ");
    auto inside = [&](int x, int y) {
      return x >= 0 && y >= 0 && x < m.width() && y < m.height() && m.at(x, y) != 0;
    };
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.at(x, y) && (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1)))
          out.at(x, y) = c.color;
  }
  return out;
}

ColorImage montage(std::span<const ColorImage> tiles, int columns, int gap) {
  require(!tiles.empty() && columns >= 1 && gap >= 0, ErrorCode::InvalidArgument, "montage arguments invalid");
  const int tw = tiles.front().width(), th = tiles.front().height();
  for (const auto& t : tiles)
    require(t.same_shape(tw, th), ErrorCode::ShapeMismatch, "montage tiles must share a resolution");
  const int n = static_cast<int>(tiles.size());
  const int cols = std::min(columns, n);
  const int rows = (n + cols - 1) / cols;
  ColorImage out(cols * tw + (cols - 1) * gap, rows * th + (rows - 1) * gap);
  for (int k = 0; k < n; ++k) {
    const int ox = (k % cols) * (tw + gap), oy = (k / cols) * (th + gap);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x) out.at(ox + x, oy + y) = tiles[static_cast<std::size_t>(k)].at(x, y);
  }
  return out;
}

}  // namespace segvar
