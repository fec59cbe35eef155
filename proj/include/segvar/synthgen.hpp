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
#include <string>
#include <vector>

#include "segvar/image.hpp"
#include "segvar/manifest.hpp"
#include "segvar/random.hpp"

namespace segvar {

/// Synthetic pelvis-like slices: a rectum (wall annulus around a darker
/// lumen) inside a body region, a tumor sector along the wall and, with some
/// probability, a rectum-like distractor organ elsewhere.
struct SynthConfig {
  int image_size = 64;
  int n_patients = 60;
  int slices_per_patient = 2;
  int depth = 12;
  double radius_min = 8.0, radius_max = 12.0;  // rectum outer radius
  double wall_min = 3.0, wall_max = 5.0;
  double tumor_extent_min = 60.0, tumor_extent_max = 150.0;  // degrees
  double tumor_inward_min = 1.0, tumor_inward_max = 3.0;     // T2-like thickening into the lumen
  double bulge_probability = 0.5;                              // T3-like outward bulge
  double bulge_max = 2.0;
  double distractor_probability = 0.5;
  double noise_std = 120.0;
  double background_level = 300.0;
  double body_level = 900.0;
  double lumen_level = 600.0;
  double wall_level = 1700.0;
  double tumor_level = 2400.0;
  double gain_jitter = 0.2;        // per-patient multiplicative gain half-range
  double slice_rotation_max = 5.0;  // degrees
  double slice_shift_max = 2.0;     // pixels
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthSample {
  std::string id;
  std::string patient;
  GrayImage image;
  BinaryMask rectum;
  BinaryMask tumor;
  bool has_distractor = false;  // false also when no disjoint position fit
};

/// Chebyshev (8-neighbour) dilation by `radius` pixels.
BinaryMask dilate(const BinaryMask& m, int radius);

/// Number of 8-connected components of the mask.
int count_components(const BinaryMask& m);

/// One independent sample (fresh patient geometry).
SynthSample gen_sample(const SynthConfig& cfg, Rng& rng);

/// The whole dataset in memory, patients in order; ids are "p<NNN>_s<k>".
std::vector<SynthSample> gen_samples(const SynthConfig& cfg);

/// Writes images/, masks_rectum/, masks_tumor/ and manifest.jsonl under
/// `out_dir`; slices of one patient share geometry up to small jitter.
Manifest gen_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace segvar
