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

#include <doctest.h>

#include "helpers.hpp"
#include "segvar/metrics.hpp"

using namespace segvar;

namespace {

BinaryMask from_bits(unsigned bits, int w, int h) {
  BinaryMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (bits >> i) & 1u;
  return m;
}

class OracleSegmenter final : public Segmenter {
 public:
  explicit OracleSegmenter(const std::vector<EvalSample>& data) : data_(data) {}
  bool has_task(Task) const override { return true; }
  BinaryMask predict(const GrayImage& img, Task t) const override {
    for (const auto& s : data_)
      if (s.item.image == img) return t == Task::Tumor ? s.item.tumor : s.item.rectum;
    fail(ErrorCode::Internal, "image not in the oracle table");
  }

 private:
  const std::vector<EvalSample>& data_;
};

}  // namespace

TEST_CASE("confusion: simple cases") {
  const BinaryMask ones(2, 2, 1);
  CHECK(confusion(ones, ones) == ConfusionCounts{4, 0, 0, 0});
  Rng rng(1);
  const auto t = testing::random_mask(5, 5, rng);
  BinaryMask inv(5, 5);
  for (std::size_t i = 0; i < t.size(); ++i) inv[i] = 1 - t[i];
  const auto c = confusion(inv, t);
  CHECK(c.tp == 0);
  CHECK(c.tn == 0);
  CHECK_THROWS_AS(confusion(BinaryMask(2, 3), BinaryMask(3, 2)), Error);
}

TEST_CASE("dsc, sensitivity, specificity: worked values") {
  // |A| = 4, |B| = 3, overlap 2.
  const BinaryMask a(3, 3, std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0, 0, 0, 0});
  const BinaryMask b(3, 3, std::vector<std::uint8_t>{0, 0, 1, 1, 1, 0, 0, 0, 0});
  CHECK(dsc(a, b) == doctest::Approx(4.0 / 7.0));
  CHECK(dsc(a, a) == 1.0);
  CHECK(dsc(BinaryMask(2, 2), BinaryMask(2, 2)) == 1.0);
  CHECK(sensitivity(ConfusionCounts{3, 0, 0, 1}) == 0.75);
  const BinaryMask mixed(2, 1, std::vector<std::uint8_t>{1, 0});
  const auto all = confusion(BinaryMask(2, 1, 1), mixed);
  CHECK(sensitivity(all) == 1.0);
  CHECK(specificity(all) == 0.0);
}

TEST_CASE("metrics equal per-pixel tallies on every pair of 3x3 masks") {
  std::size_t mismatches = 0;
  for (unsigned pb = 0; pb < 512; ++pb) {
    const auto pred = from_bits(pb, 3, 3);
    for (unsigned tb = 0; tb < 512; ++tb) {
      const auto truth = from_bits(tb, 3, 3);
      std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
      for (int i = 0; i < 9; ++i) {
        const bool p = (pb >> i) & 1u, t = (tb >> i) & 1u;
        tp += p && t;
        fp += p && !t;
        tn += !p && !t;
        fn += !p && t;
      }
      const auto c = confusion(pred, truth);
      const double d = (tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
      const double se = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
      const double sp = (tn + fp) == 0 ? 1.0 : static_cast<double>(tn) / (tn + fp);
      if (!(c == ConfusionCounts{tp, fp, tn, fn}) || dsc(c) != d || sensitivity(c) != se || specificity(c) != sp)
        ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("crossval: oracle predictor scores one everywhere") {
  Rng rng(2);
  std::vector<EvalSample> data;
  IdList ids;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "s" + std::to_string(i);
    data.push_back({id, {testing::random_image(8, 8, 8, rng), testing::random_mask(8, 8, rng),
                         testing::random_mask(8, 8, rng, 0.2)}});
    ids.push_back(id);
  }
  const auto plan = kfold(ids, 3, 4);
  const std::vector<ModelSpec> specs{model_spec_from_string("mrsn"), model_spec_from_string("srsn-tumor")};
  std::size_t calls = 0;
  const SegmenterFactory factory = [&](const ModelSpec&, std::size_t, std::span<const SegItem> train) {
    ++calls;
    CHECK(train.size() == 4);
    return std::make_unique<OracleSegmenter>(data);
  };
  const auto report = crossval_evaluate(data, plan, specs, factory);
  CHECK(calls == 6);
  CHECK(report.rows.size() == 3);  // mrsn x {tumor, rectum}, srsn-tumor x tumor
  for (const auto& r : report.rows) {
    CHECK(r.n == 6);
    CHECK(r.dsc.mean == 1.0);
    CHECK(r.sensitivity.mean == 1.0);
    CHECK(r.specificity.mean == 1.0);
  }
  for (const auto& [key, rows] : report.per_sample) CHECK(rows.size() == 6);
  // Identical per-sample values leave the paired tests degenerate.
  REQUIRE_FALSE(report.comparisons.empty());
  for (const auto& c : report.comparisons) CHECK_FALSE(c.test.has_value());
}

TEST_CASE("crossval: trained models produce values in range") {
  Rng rng(3);
  std::vector<EvalSample> data;
  IdList ids;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    data.push_back({id, {testing::random_image(12, 12, 8, rng), testing::random_mask(12, 12, rng),
                         testing::random_mask(12, 12, rng, 0.3)}});
    ids.push_back(id);
  }
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  const std::vector<ModelSpec> specs{model_spec_from_string("srsn-tumor")};
  const auto report = crossval_evaluate(data, kfold(ids, 2, 1), specs, training_factory(cfg, {}, 7));
  REQUIRE(report.rows.size() == 1);
  for (const auto& s : report.per_sample.begin()->second) {
    CHECK(s.dsc >= 0.0);
    CHECK(s.dsc <= 1.0);
    CHECK(s.sensitivity <= 1.0);
    CHECK(s.specificity <= 1.0);
  }
  CHECK(fold_seed(7, 0) != fold_seed(7, 1));
}
