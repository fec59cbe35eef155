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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "segvar/biasvar.hpp"
#include "segvar/config.hpp"
#include "segvar/manifest.hpp"
#include "segvar/metrics.hpp"
#include "segvar/splits.hpp"
#include "segvar/synthgen.hpp"

namespace segvar {

/// Runs fn(0..n-1) on up to `jobs` threads. fn must only write to
/// index-owned state; results are then independent of the thread count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Windows every slice of one patient (fixed window when given, otherwise the
/// patient's own), then applies CLAHE.
std::vector<GrayImage> preprocess_patient(std::span<const GrayImage> slices, const ClaheParams& clahe,
                                          const std::optional<WindowParams>& window);

/// In-memory dataset: preprocessed 8-bit images with their masks, resized to
/// the evaluation size, plus a manifest carrying ids and patients.
struct Dataset {
  Manifest manifest;
  std::vector<EvalSample> samples;  // manifest order

  const SegItem& item(const std::string& id) const;
};

Dataset prepare_dataset(std::span<const SynthSample> raw, const ExperimentConfig& cfg);

/// Seed shared by every model kind trained on training set `set`.
std::uint64_t set_seed(std::uint64_t root, std::size_t set);

/// Deterministic per-sample rescale factor in [min, max]; 1 when the range is [1, 1].
double test_rescale_factor(const ExperimentConfig& cfg, const std::string& id);

/// A test image and its truth at the resolution predictions are made at.
struct TestInput {
  std::string id;
  GrayImage image;
  BinaryMask tumor;
  BinaryMask rectum;
};

std::vector<TestInput> make_test_inputs(const Dataset& data, const IdList& test_ids, const ExperimentConfig& cfg);

/// Trains one model of `kind` on training set `set` of the plan.
ToyNet train_for_set(const Dataset& data, const SplitPlan& plan, std::size_t set, const ModelSpec& spec,
                     const ExperimentConfig& cfg);

/// The task whose ensemble is decomposed for a model kind (tumor unless the
/// net only segments the rectum).
Task analysis_task(const ModelSpec& spec);

struct KindResult {
  std::string kind;
  std::vector<SampleDecomposition> samples;  // test order
  std::vector<SampleExpectations> expectations() const;
};

struct BiasVarResult {
  std::vector<KindResult> kinds;
  std::vector<ExpectationSummary> summaries;
  std::vector<KindComparison> comparisons;
};

/// Decomposes per-kind ensembles given predictions[kind][set][test sample].
BiasVarResult decompose_ensembles(std::span<const std::string> kinds,
                                  const std::vector<std::vector<std::vector<BinaryMask>>>& predictions,
                                  std::span<const TestInput> tests, std::span<const Task> tasks);

/// Trains every kind on every training set of the plan and decomposes the
/// test predictions. Each entry of `rescale_cfgs` evaluates the same trained
/// models on differently rescaled test inputs; one result per entry.
std::vector<BiasVarResult> run_biasvar(const Dataset& data, const SplitPlan& plan,
                                       std::span<const std::string> kinds, const ExperimentConfig& cfg,
                                       std::span<const ExperimentConfig> rescale_cfgs);

}  // namespace segvar
