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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segvar/image.hpp"
#include "segvar/learner.hpp"
#include "segvar/splits.hpp"
#include "segvar/stats.hpp"

namespace segvar {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth);

/// 2tp / (2tp + fp + fn); 1 when both masks are empty.
double dsc(const ConfusionCounts& c) noexcept;
double dsc(const BinaryMask& pred, const BinaryMask& truth);
/// tp / (tp + fn); 1 when the truth has no positives.
double sensitivity(const ConfusionCounts& c) noexcept;
/// tn / (tn + fp); 1 when the truth has no negatives.
double specificity(const ConfusionCounts& c) noexcept;

struct SampleMetrics {
  std::string id;
  double dsc = 0, sensitivity = 0, specificity = 0;
};

struct MeanStd {
  double mean = 0.0;
  std::optional<double> std;  // absent for a single sample
};

/// One row per (model kind, task); std is over samples.
struct EvalRow {
  std::string kind;
  Task task = Task::Tumor;
  std::size_t n = 0;
  MeanStd dsc, sensitivity, specificity;
};

struct PairedComparison {
  std::string kind_a, kind_b;
  Task task = Task::Tumor;
  std::string metric;
  std::optional<TTestResult> test;  // absent when degenerate
  std::string note;
};

struct CrossvalReport {
  std::vector<EvalRow> rows;
  /// per (kind, task): metrics in evaluation order, each sample exactly once.
  std::map<std::pair<std::string, Task>, std::vector<SampleMetrics>> per_sample;
  std::vector<PairedComparison> comparisons;
};

/// A named learner condition evaluated by cross-validation.
struct ModelSpec {
  std::string name;  // e.g. "srsn-tumor", "mrsn", "mrsn-aug"
  NetKind net = NetKind::Mrsn;
  bool augment = false;
};

ModelSpec model_spec_from_string(const std::string& name);

/// Produces a segmenter for (spec, fold, training items). The default trains
/// a ToyNet; tests inject oracles; the CLI loads models from disk.
using SegmenterFactory = std::function<std::unique_ptr<Segmenter>(
    const ModelSpec& spec, std::size_t fold, std::span<const SegItem> train_items)>;

/// Evaluation data keyed by sample id.
struct EvalSample {
  std::string id;
  SegItem item;
};

/// For every fold: fit on the other folds, evaluate on the fold. Reports mean
/// and std per (kind, task) and paired t-tests on per-sample DSC, sensitivity
/// and specificity between every pair of kinds sharing a task.
CrossvalReport crossval_evaluate(std::span<const EvalSample> data, const KfoldPlan& plan,
                                 std::span<const ModelSpec> specs, const SegmenterFactory& factory);

/// Training seed of cross-validation fold `fold`.
std::uint64_t fold_seed(std::uint64_t root, std::size_t fold);

SegmenterFactory training_factory(const TrainConfig& cfg, const AugmentConfig& augment,
                                  std::uint64_t seed);

std::string crossval_tsv(const CrossvalReport& r, const std::string& provenance);
std::string crossval_json(const CrossvalReport& r, const std::string& provenance);

}  // namespace segvar
