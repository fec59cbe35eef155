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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segvar/image.hpp"
#include "segvar/stats.hpp"

namespace segvar {

/// D binary predictions of one test image, one per training set.
/// D must be odd and >= 3 so the per-pixel mode is unique.
class PredictionEnsemble {
 public:
  PredictionEnsemble(std::string sample_id, std::vector<BinaryMask> predictions);

  const std::string& sample_id() const noexcept { return id_; }
  const std::vector<BinaryMask>& predictions() const noexcept { return preds_; }
  int size() const noexcept { return static_cast<int>(preds_.size()); }
  int width() const noexcept { return preds_.front().width(); }
  int height() const noexcept { return preds_.front().height(); }

  /// Number of predictions voting 1 at each pixel.
  std::vector<std::uint16_t> positive_votes() const;

 private:
  std::string id_;
  std::vector<BinaryMask> preds_;
};

/// Per-pixel zero-one decomposition stored as integer counts over D, so the
/// identity loss = bias ? D - var : var holds with no rounding.
struct DecompositionMaps {
  int ensemble_size = 0;
  BinaryMask main;                         // mode of the predictions
  BinaryMask bias;                         // truth XOR main
  std::vector<std::uint16_t> variance_count;  // predictions disagreeing with main
  std::vector<std::uint16_t> loss_count;      // predictions disagreeing with truth

  ValueMap variance() const;
  ValueMap expected_loss() const;
  /// c2 * V with c2 = +1 on unbiased and -1 on biased pixels.
  ValueMap signed_variance() const;
};

BinaryMask main_prediction(const PredictionEnsemble& e);
/// Zero-one loss of the main prediction against the truth.
BinaryMask bias_map(const BinaryMask& truth, const BinaryMask& main);
/// Fraction of predictions disagreeing with `main`.
ValueMap variance_map(const PredictionEnsemble& e, const BinaryMask& main);
std::vector<std::uint16_t> variance_counts(const PredictionEnsemble& e, const BinaryMask& main);
/// Fraction of predictions disagreeing with the truth, computed directly.
ValueMap expected_loss_map(const BinaryMask& truth, const PredictionEnsemble& e);

/// Full decomposition. Verifies loss = bias + c2 * variance at every pixel in
/// integer arithmetic and throws Internal on any violation.
DecompositionMaps decompose(const BinaryMask& truth, const PredictionEnsemble& e);

/// Counts pixels where the decomposition identity fails (0 for a valid decomposition).
std::size_t identity_violations(const DecompositionMaps& d);

/// Mean of `map` over roi-positive pixels. Throws EmptyInput on an empty roi.
double roi_expectation(const ValueMap& map, const BinaryMask& roi);
double roi_expectation(const BinaryMask& map, const BinaryMask& roi);

struct Expectations {
  double bias = 0.0;
  double variance = 0.0;         // E[V]
  double signed_variance = 0.0;  // E[c2 V]; bias + signed_variance == loss
  double loss = 0.0;
};

struct SampleExpectations {
  std::string id;
  std::size_t positive_pixels = 0;
  std::size_t negative_pixels = 0;
  std::optional<Expectations> positive;  // absent when the truth is empty
  std::optional<Expectations> negative;  // absent when the truth covers the image
  Expectations total;
};

struct SampleDecomposition {
  DecompositionMaps maps;
  SampleExpectations expectations;
};

/// Decomposes one test sample; the positive ROI is the truth itself.
SampleDecomposition decompose_sample(const BinaryMask& truth, const PredictionEnsemble& e);

struct SummaryCell {
  double mean = 0.0;
  std::optional<double> std;
  std::size_t n = 0;
};

/// Table-style summary of one model kind: mean and n-1 std of E[B], E[V],
/// E[L] over the positive ROI and the whole image. Samples lacking a
/// positive ROI are excluded from the positive columns only.
struct ExpectationSummary {
  std::string kind;
  SummaryCell pos_bias, pos_variance, pos_loss;
  SummaryCell total_bias, total_variance, total_loss;
  std::size_t excluded_positive = 0;
};

ExpectationSummary summarize_table(const std::string& kind, std::span<const SampleExpectations> rows);

/// Column accessors for pairing kinds in t-tests.
enum class Region { Positive, Total };
enum class Quantity { Bias, Variance, Loss };
const char* to_string(Region r) noexcept;
const char* to_string(Quantity q) noexcept;
std::optional<double> expectation_value(const SampleExpectations& s, Region r, Quantity q);

struct KindComparison {
  std::string kind_a, kind_b;
  Region region = Region::Positive;
  Quantity quantity = Quantity::Variance;
  std::optional<TTestResult> test;
  std::string note;
};

/// Paired t-tests for every pair of kinds and every (region, quantity)
/// column, pairing samples by id (samples missing a column are dropped).
std::vector<KindComparison> compare_kinds(
    std::span<const std::pair<std::string, std::vector<SampleExpectations>>> kinds);

std::string expectations_json(const std::string& kind, std::span<const SampleExpectations> rows,
                              const std::string& provenance);
std::string expectations_tsv(std::span<const SampleExpectations> rows, const std::string& provenance);
std::string summary_tsv(std::span<const ExpectationSummary> summaries,
                        std::span<const KindComparison> comparisons, const std::string& provenance);
std::string summary_json(std::span<const ExpectationSummary> summaries,
                         std::span<const KindComparison> comparisons, const std::string& provenance);

}  // namespace segvar
