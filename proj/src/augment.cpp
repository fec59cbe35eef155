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

#include "segvar/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace segvar {

void AugmentConfig::validate() const {
  require(scale_step >= 1, ErrorCode::Config, "augment.scale_step must be >= 1");
  require(scale_min >= 1 && scale_min <= scale_max, ErrorCode::Config,
          "augment.scale_min must be in [1, scale_max]");
  require(scale_min % scale_step == 0 && scale_max % scale_step == 0, ErrorCode::Config,
          "augment scale bounds must be multiples of scale_step");
  require(brightness >= 0 && brightness < 1 && contrast >= 0 && sharpness >= 0, ErrorCode::Config,
          "augment jitter half-ranges must be nonnegative (brightness < 1)");
  require(rotation_max >= 0, ErrorCode::Config, "augment.rotation_max must be >= 0");
  require(crop_max_frac >= 0 && crop_max_frac < 0.5, ErrorCode::Config,
          "augment.crop_max_frac must be in [0, 0.5)");
}

std::vector<int> AugmentConfig::scale_choices() const {
  validate();
  std::vector<int> out;
  for (int s = scale_min; s <= scale_max; s += scale_step) out.push_back(s);
  return out;
}

Batch resize_batch(const Batch& b, int size) {
  Batch out;
  out.reserve(b.size());
  for (const auto& it : b) {
    require(it.rectum.same_shape(it.image) && it.tumor.same_shape(it.image), ErrorCode::ShapeMismatch,
            "image and masks must share a resolution");
    out.push_back({resample(it.image, size, size, Interp::Bilinear),
                   resample_mask(it.rectum, size, size), resample_mask(it.tumor, size, size)});
  }
  return out;
}

Batch random_scale_batch(const Batch& b, Rng& rng, const AugmentConfig& cfg) {
  require(!b.empty(), ErrorCode::EmptyInput, "random_scale_batch on an empty batch");
  const auto choices = cfg.scale_choices();
  const int size = choices[static_cast<std::size_t>(rng.below(choices.size()))];
  return resize_batch(b, size);
}

PhotometricFactors draw_photometric(Rng& rng, const AugmentConfig& cfg) {
  PhotometricFactors f;
  f.brightness = rng.uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
  f.contrast = rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
  f.sharpness = rng.uniform(1.0 - cfg.sharpness, 1.0 + cfg.sharpness);
  return f;
}

GrayImage apply_photometric(const GrayImage& img, const PhotometricFactors& f) {
  require(img.depth() == 8, ErrorCode::InvalidArgument, "photometric jitter expects an 8-bit image");
  const int w = img.width(), h = img.height();
  std::vector<double> v(img.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = img[i] * f.brightness;

  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x = mean + (x - mean) * f.contrast;

  if (f.sharpness != 1.0) {
    std::vector<double> blur(v.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            const int yy = std::clamp(y + dy, 0, h - 1);
            s += v[static_cast<std::size_t>(yy) * w + xx];
          }
        blur[static_cast<std::size_t>(y) * w + x] = s / 9.0;
      }
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += (v[i] - blur[i]) * (f.sharpness - 1.0);
  }

  GrayImage out(w, h, 8);
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<std::uint16_t>(std::round(std::clamp(v[i], 0.0, 255.0)));
  return out;
}

GrayImage photometric_jitter(const GrayImage& img, Rng& rng, const AugmentConfig& cfg) {
  return apply_photometric(img, draw_photometric(rng, cfg));
}

GeometricParams draw_geometric(int side, Rng& rng, const AugmentConfig& cfg) {
  GeometricParams g;
  g.angle_deg = rng.uniform(-cfg.rotation_max, cfg.rotation_max);
  const bool flip_draw = rng.bernoulli(0.5);
  g.flip = cfg.flip && flip_draw;
  const int max_inset = static_cast<int>(std::floor(cfg.crop_max_frac * side));
  g.inset_left = static_cast<int>(rng.integer(0, max_inset));
  g.inset_right = static_cast<int>(rng.integer(0, max_inset));
  g.inset_top = static_cast<int>(rng.integer(0, max_inset));
  g.inset_bottom = static_cast<int>(rng.integer(0, max_inset));
  return g;
}

namespace {

template <typename R, typename Sample>
R rotate(const R& src, double angle_deg, R out, Sample&& sample) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  const double cx = (src.width() - 1) / 2.0, cy = (src.height() - 1) / 2.0;
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = std::clamp(cx + c * dx + s * dy, 0.0, src.width() - 1.0);
      const double sy = std::clamp(cy - s * dx + c * dy, 0.0, src.height() - 1.0);
      out.at(x, y) = sample(sx, sy);
    }
  return out;
}

GrayImage rotate_image(const GrayImage& img, double angle) {
  return rotate(img, angle, GrayImage(img.width(), img.height(), img.depth()), [&](double sx, double sy) {
    const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = sx - x0, fy = sy - y0;
    const double v = (img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx) * (1 - fy) +
                     (img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx) * fy;
    return static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, double(img.max_value())));
  });
}

BinaryMask rotate_mask(const BinaryMask& m, double angle) {
  return rotate(m, angle, BinaryMask(m.width(), m.height()), [&](double sx, double sy) {
    return m.at(static_cast<int>(std::floor(sx + 0.5)), static_cast<int>(std::floor(sy + 0.5)));
  });
}

template <typename R>
R flip_lr(const R& src) {
  R out = src;
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) out.at(x, y) = src.at(src.width() - 1 - x, y);
  return out;
}

}  // namespace

SegItem apply_geometric(const SegItem& item, const GeometricParams& g) {
  const int side = item.image.width();
  require(item.image.height() == side, ErrorCode::InvalidArgument, "geometric jitter expects a square item");
  require(item.rectum.same_shape(item.image) && item.tumor.same_shape(item.image),
          ErrorCode::ShapeMismatch, "image and masks must share a resolution");
  SegItem out = item;
  if (g.angle_deg != 0.0) {
    out.image = rotate_image(out.image, g.angle_deg);
    out.rectum = rotate_mask(out.rectum, g.angle_deg);
    out.tumor = rotate_mask(out.tumor, g.angle_deg);
  }
  if (g.flip) {
    out.image = flip_lr(out.image);
    out.rectum = flip_lr(out.rectum);
    out.tumor = flip_lr(out.tumor);
  }
  const int w = side - g.inset_left - g.inset_right;
  const int h = side - g.inset_top - g.inset_bottom;
  require(w >= 1 && h >= 1, ErrorCode::InvalidArgument, "crop insets consume the whole item");
  if (w != side || h != side) {
    const int s = std::min(w, h);
    const RoiBox box{g.inset_left + (w - s) / 2, g.inset_top + (h - s) / 2, s, s};
    out.image = crop(out.image, box);
    out.rectum = crop(out.rectum, box);
    out.tumor = crop(out.tumor, box);
  }
  return out;
}

SegItem geometric_jitter(const SegItem& item, Rng& rng, const AugmentConfig& cfg) {
  return apply_geometric(item, draw_geometric(item.image.width(), rng, cfg));
}

Batch augment_pipeline(const Batch& b, Rng& rng, const AugmentConfig& cfg) {
  require(!b.empty(), ErrorCode::EmptyInput, "augment_pipeline on an empty batch");
  cfg.validate();
  Batch jittered;
  jittered.reserve(b.size());
  for (const auto& it : b) {
    SegItem g = geometric_jitter(it, rng, cfg);
    g.image = photometric_jitter(g.image, rng, cfg);
    jittered.push_back(std::move(g));
  }
  return random_scale_batch(jittered, rng, cfg);
}

}  // namespace segvar
