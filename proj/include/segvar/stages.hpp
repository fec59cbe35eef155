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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segvar/config.hpp"
#include "segvar/experiment.hpp"

namespace segvar {

/// File-based pipeline stages. Every stage reads its predecessor's artifacts
/// under the output root and writes its own:
///
///   data/          synth: raw 12-bit images, masks, manifest.jsonl
///   prep/          preprocess: windowed + CLAHE 8-bit images at eval size
///   splits/        split: holdout.json (test + training sets), kfold.json
///   models/        train: <kind>/set<k>.bin (+ .json sidecar)
///   cv_models/     train --cv: <kind>/fold<k>.bin
///   predictions/   predict: inputs/<id>_{image,tumor,rectum}.pgm,
///                  ensembles/<kind>/set<k>/<id>.pgm
///   biasvar/       biasvar: <kind>/expectations.{json,tsv}, <kind>/maps/,
///                  summary.{json,tsv}
///   eval/          evaluate: crossval.{json,tsv}
///   renders/       render: <kind>/<id>_{variance,bias,loss}.ppm,
///                  <kind>_montage.ppm with --montage
struct StageOptions {
  std::filesystem::path root;
  /// Replaces the stage's default upstream directory.
  std::optional<std::filesystem::path> input;
  bool cv = false;       // train: cross-validation folds instead of training sets
  bool montage = false;  // render: also tile the ensemble predictions
};

void stage_synth(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_preprocess(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_split(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_train(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_predict(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_biasvar(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_evaluate(const ExperimentConfig& cfg, const StageOptions& opt);
void stage_render(const ExperimentConfig& cfg, const StageOptions& opt);
/// All stages in order; cross-validation only when cfg.run_crossval.
void stage_pipeline(const ExperimentConfig& cfg, const StageOptions& opt);

/// Dispatches by name ("synth", ..., "pipeline"); Config error for unknown names.
void run_stage(const std::string& name, const ExperimentConfig& cfg, const StageOptions& opt);
const std::vector<std::string>& stage_names();

/// Synthesis settings with the seed derived from the experiment root seed.
SynthConfig seeded_synth(const ExperimentConfig& cfg);

/// Loads a preprocessed tree (prep/manifest.jsonl) back into memory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace segvar
