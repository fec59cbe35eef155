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

#include "segvar/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace segvar {

WindowParams compute_window(std::span<const GrayImage> slices) {
  require(!slices.empty(), ErrorCode::EmptyInput, "compute_window needs at least one slice");
  const int depth = slices.front().depth();
  std::uint16_t lo = std::numeric_limits<std::uint16_t>::max();
  std::uint16_t hi = 0;
  for (const auto& s : slices) {
    require(s.depth() == depth, ErrorCode::InvalidArgument, "slices of one patient must share depth");
    require(!s.empty(), ErrorCode::EmptyInput, "empty slice");
    const auto [mn, mx] = std::minmax_element(s.pixels().begin(), s.pixels().end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  WindowParams w{0.9 * lo, 0.9 * hi};
  require(w.lo < w.hi, ErrorCode::DegenerateWindow, "degenerate intensity window (constant volume)");
  return w;
}

GrayImage apply_window(const GrayImage& img, const WindowParams& w) {
  require(w.lo < w.hi, ErrorCode::DegenerateWindow, "window requires lo < hi");
  GrayImage out(img.width(), img.height(), 8);
  const double span = w.hi - w.lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = std::clamp((img[i] - w.lo) / span, 0.0, 1.0);
    out[i] = static_cast<std::uint16_t>(std::round(255.0 * t));
  }
  return out;
}

std::uint32_t clahe_clip_limit(double clip_factor, std::size_t tile_pixels) {
  const double limit = std::floor(clip_factor * static_cast<double>(tile_pixels) / 256.0);
  return static_cast<std::uint32_t>(std::max(1.0, limit));
}

Histogram clip_histogram(const Histogram& h, std::uint32_t limit, std::uint64_t& excess) {
  Histogram out{};
  excess = 0;
  for (std::size_t b = 0; b < h.size(); ++b) {
    if (h[b] > limit) {
      excess += h[b] - limit;
      out[b] = limit;
    } else {
      out[b] = h[b];
    }
  }
  return out;
}

Histogram redistribute_excess(const Histogram& clipped, std::uint64_t excess) {
  Histogram out = clipped;
  const auto per_bin = static_cast<std::uint32_t>(excess / out.size());
  const auto remainder = static_cast<std::size_t>(excess % out.size());
  for (std::size_t b = 0; b < out.size(); ++b) out[b] += per_bin + (b < remainder ? 1u : 0u);
  return out;
}

namespace {

void validate(const GrayImage& img, const ClaheParams& p) {
  require(img.depth() == 8, ErrorCode::InvalidArgument, "clahe expects an 8-bit image");
  require(p.tiles_x >= 1 && p.tiles_y >= 1, ErrorCode::InvalidArgument, "tile grid must be >= 1x1");
  require(p.clip_factor >= 1.0, ErrorCode::InvalidArgument, "clip_factor must be >= 1");
  require(img.width() >= p.tiles_x && img.height() >= p.tiles_y, ErrorCode::InvalidArgument,
          "image smaller than tile grid");
}

// Tile t spans [t*n/tiles, (t+1)*n/tiles).
inline int tile_start(int t, int n, int tiles) { return static_cast<int>(static_cast<long>(t) * n / tiles); }

// Locates the pair of tile centers bracketing coordinate c and the weight of
// the upper one; edge tiles are replicated outside the outermost centers.
struct Bracket {
  int lo, hi;
  double w_hi;
};

Bracket bracket(const std::vector<double>& centers, double c) {
  const int n = static_cast<int>(centers.size());
  if (c <= centers.front()) return {0, 0, 0.0};
  if (c >= centers.back()) return {n - 1, n - 1, 0.0};
  const auto it = std::upper_bound(centers.begin(), centers.end(), c);
  const int hi = static_cast<int>(it - centers.begin());
  const int lo = hi - 1;
  return {lo, hi, (c - centers[lo]) / (centers[hi] - centers[lo])};
}

}  // namespace

std::vector<ClaheTile> clahe_tiles(const GrayImage& img, const ClaheParams& p) {
  validate(img, p);
  std::vector<ClaheTile> tiles;
  tiles.reserve(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
  for (int ty = 0; ty < p.tiles_y; ++ty) {
    for (int tx = 0; tx < p.tiles_x; ++tx) {
      ClaheTile t;
      t.x0 = tile_start(tx, img.width(), p.tiles_x);
      t.y0 = tile_start(ty, img.height(), p.tiles_y);
      t.w = tile_start(tx + 1, img.width(), p.tiles_x) - t.x0;
      t.h = tile_start(ty + 1, img.height(), p.tiles_y) - t.y0;
      for (int y = t.y0; y < t.y0 + t.h; ++y)
        for (int x = t.x0; x < t.x0 + t.w; ++x) ++t.raw[img.at(x, y)];
      const std::size_t npix = static_cast<std::size_t>(t.w) * t.h;
      t.clip_limit = clahe_clip_limit(p.clip_factor, npix);
      std::uint64_t excess = 0;
      t.clipped = clip_histogram(t.raw, t.clip_limit, excess);
      t.redistributed = redistribute_excess(t.clipped, excess);
      std::uint64_t cdf = 0;
      for (std::size_t b = 0; b < 256; ++b) {
        cdf += t.redistributed[b];
        t.lut[b] = static_cast<std::uint8_t>(std::min<std::uint64_t>(255, cdf * 255 / npix));
      }
      tiles.push_back(t);
    }
  }
  return tiles;
}

GrayImage clahe(const GrayImage& img, const ClaheParams& p) {
  const auto tiles = clahe_tiles(img, p);
  std::vector<double> cx(p.tiles_x), cy(p.tiles_y);
  for (int t = 0; t < p.tiles_x; ++t)
    cx[t] = 0.5 * (tile_start(t, img.width(), p.tiles_x) + tile_start(t + 1, img.width(), p.tiles_x)) - 0.5;
  for (int t = 0; t < p.tiles_y; ++t)
    cy[t] = 0.5 * (tile_start(t, img.height(), p.tiles_y) + tile_start(t + 1, img.height(), p.tiles_y)) - 0.5;

  auto lut = [&](int tx, int ty) -> const std::array<std::uint8_t, 256>& {
    return tiles[static_cast<std::size_t>(ty) * p.tiles_x + tx].lut;
  };

  GrayImage out(img.width(), img.height(), 8);
  for (int y = 0; y < img.height(); ++y) {
    const Bracket by = bracket(cy, y);
    for (int x = 0; x < img.width(); ++x) {
      const Bracket bx = bracket(cx, x);
      const auto v = img.at(x, y);
      const double top = (1.0 - bx.w_hi) * lut(bx.lo, by.lo)[v] + bx.w_hi * lut(bx.hi, by.lo)[v];
      const double bottom = (1.0 - bx.w_hi) * lut(bx.lo, by.hi)[v] + bx.w_hi * lut(bx.hi, by.hi)[v];
      out.at(x, y) = static_cast<std::uint16_t>(std::round((1.0 - by.w_hi) * top + by.w_hi * bottom));
    }
  }
  return out;
}

double entropy_bits(const GrayImage& img) {
  require(img.depth() == 8, ErrorCode::InvalidArgument, "entropy_bits expects an 8-bit image");
  Histogram h{};
  for (auto v : img.pixels()) ++h[v];
  const double n = static_cast<double>(img.size());
  double e = 0.0;
  for (auto c : h)
    if (c > 0) {
      const double q = c / n;
      e -= q * std::log2(q);
    }
  return e;
}

}  // namespace segvar
