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

#include <vector>

#include "segvar/image.hpp"
#include "segvar/random.hpp"

namespace segvar {

struct AugmentConfig {
  int scale_min = 48;
  int scale_max = 80;
  int scale_step = 16;
  double brightness = 0.2;  // half-range of the multiplicative factor
  double contrast = 0.2;
  double sharpness = 0.2;
  double rotation_max = 15.0;  // degrees
  double crop_max_frac = 0.10;
  bool flip = true;

  /// Throws Config on scale bounds that are not step multiples, inverted
  /// bounds, or crop fractions outside [0, 0.5).
  void validate() const;
  std::vector<int> scale_choices() const;
};

/// One training example: an 8-bit image and its two masks at the same resolution.
struct SegItem {
  GrayImage image;
  BinaryMask rectum;
  BinaryMask tumor;
};

using Batch = std::vector<SegItem>;

struct PhotometricFactors {
  double brightness = 1.0;
  double contrast = 1.0;
  double sharpness = 1.0;
};

struct GeometricParams {
  double angle_deg = 0.0;
  bool flip = false;
  int inset_left = 0, inset_right = 0, inset_top = 0, inset_bottom = 0;
};

/// Resizes every item to size x size (bilinear images, nearest masks).
Batch resize_batch(const Batch& b, int size);

/// Draws one square size from cfg.scale_choices() and applies it to the batch.
Batch random_scale_batch(const Batch& b, Rng& rng, const AugmentConfig& cfg);

PhotometricFactors draw_photometric(Rng& rng, const AugmentConfig& cfg);
/// brightness, then contrast about the image mean, then unsharp masking
/// against a 3x3 edge-clamped box blur; clamped to [0,255] and rounded.
GrayImage apply_photometric(const GrayImage& img, const PhotometricFactors& f);
GrayImage photometric_jitter(const GrayImage& img, Rng& rng, const AugmentConfig& cfg);

GeometricParams draw_geometric(int side, Rng& rng, const AugmentConfig& cfg);
/// Rotation about the center, optional left-right flip, then an inset crop
/// re-squared by a center crop. Masks use nearest sampling.
SegItem apply_geometric(const SegItem& item, const GeometricParams& g);
SegItem geometric_jitter(const SegItem& item, Rng& rng, const AugmentConfig& cfg);

/// geometric, photometric per item, then one batch-wide random scale.
Batch augment_pipeline(const Batch& b, Rng& rng, const AugmentConfig& cfg);

}  // namespace segvar
