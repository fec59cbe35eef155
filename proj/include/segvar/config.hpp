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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segvar/augment.hpp"
#include "segvar/image.hpp"
#include "segvar/learner.hpp"
#include "segvar/preprocess.hpp"
#include "segvar/synthgen.hpp"

namespace segvar {

/// Everything one experiment needs. All module seeds derive from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  int jobs = 1;

  SynthConfig synth;
  ClaheParams clahe;
  std::optional<WindowParams> window;  // fixed window; per-patient when absent
  AugmentConfig augment;
  TrainConfig train;

  double test_frac = 0.1;
  int n_sets = 9;
  int kfolds = 10;
  bool group_by_patient = true;

  int eval_size = 64;
  std::vector<std::string> biasvar_kinds = {"srsn-tumor", "mrsn", "mrsn-aug"};
  std::vector<std::string> eval_kinds = {"srsn-tumor", "srsn-rectum", "mrsn", "mrsn-aug"};
  bool run_crossval = true;
  /// Test images rescaled by U[min, max] before prediction; off when min == max == 1.
  double test_rescale_min = 1.0;
  double test_rescale_max = 1.0;

  double render_alpha = 0.5;
  std::optional<RoiBox> render_crop;
  int render_samples = 2;

  void validate() const;
  /// Sets one dotted key (e.g. "train.epochs") from its textual value.
  void set(const std::string& key, const std::string& value);
  /// Canonical "key = value" listing of every field, sorted by key.
  std::string canonical() const;
  /// FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;
  /// "config=<hash> seed=<seed>" stamp for report files.
  std::string provenance() const;
};

/// Parses a TOML-style document: [section] headers, `key = value` lines,
/// '#' comments; strings may be quoted. Unknown keys are Config errors.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

std::string fnv1a_hex(const std::string& text);

}  // namespace segvar
