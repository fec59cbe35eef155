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

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "segvar/biasvar.hpp"

using namespace segvar;

namespace {

PredictionEnsemble random_ensemble(int d, int w, int h, Rng& rng, double p = 0.5) {
  std::vector<BinaryMask> preds;
  for (int k = 0; k < d; ++k) preds.push_back(testing::random_mask(w, h, rng, p));
  return PredictionEnsemble("x", std::move(preds));
}

// Nine masks of one pixel with `ones` votes for 1.
PredictionEnsemble votes(int ones, int d = 9) {
  std::vector<BinaryMask> preds;
  for (int k = 0; k < d; ++k) preds.emplace_back(1, 1, k < ones ? 1 : 0);
  return PredictionEnsemble("v", std::move(preds));
}

}  // namespace

TEST_CASE("main prediction: majority votes") {
  CHECK(main_prediction(votes(5))[0] == 1);
  CHECK(main_prediction(votes(4))[0] == 0);
  Rng rng(1);
  const auto m = testing::random_mask(4, 4, rng);
  CHECK(main_prediction(PredictionEnsemble("s", {m, m, m})) == m);
}

TEST_CASE("ensemble size must be odd and at least three") {
  for (int d : {0, 1, 2, 4, 8}) {
    try {
      votes(0, d);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EvenEnsemble);
    }
  }
  CHECK_THROWS_AS(PredictionEnsemble("s", {BinaryMask(2, 2), BinaryMask(2, 2), BinaryMask(3, 2)}), Error);
}

TEST_CASE("bias map") {
  Rng rng(2);
  const auto t = testing::random_mask(5, 5, rng);
  CHECK(bias_map(t, t) == BinaryMask(5, 5, 0));
  BinaryMask inv(5, 5);
  for (std::size_t i = 0; i < t.size(); ++i) inv[i] = 1 - t[i];
  CHECK(bias_map(t, inv) == BinaryMask(5, 5, 1));
  auto one_off = t;
  one_off[7] ^= 1;
  const auto b = bias_map(t, one_off);
  CHECK(std::count(b.data().begin(), b.data().end(), 1) == 1);
}

TEST_CASE("variance and loss for known votes") {
  const auto e = votes(5);
  const auto main = main_prediction(e);
  CHECK(variance_map(e, main)[0] == doctest::Approx(4.0 / 9.0));
  // truth 0: five of nine predictions are wrong, main is wrong too.
  const BinaryMask zero(1, 1, 0);
  const auto d = decompose(zero, e);
  CHECK(d.bias[0] == 1);
  CHECK(d.loss_count[0] == 5);
  CHECK(d.variance_count[0] == 4);
  CHECK(expected_loss_map(zero, e)[0] == doctest::Approx(5.0 / 9.0));
  CHECK(d.signed_variance()[0] == doctest::Approx(-4.0 / 9.0));

  Rng rng(3);
  const auto m = testing::random_mask(6, 6, rng);
  const auto same = decompose(m, PredictionEnsemble("p", {m, m, m, m, m}));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(same.variance_count[i] == 0);
    CHECK(same.loss_count[i] == 0);
  }
}

TEST_CASE("decomposition matches direct enumeration on 3x3 ensembles") {
  Rng rng(4);
  for (int c = 0; c < 200; ++c) {
    const int d = 3 + 2 * static_cast<int>(rng.below(4));
    const auto truth = testing::random_mask(3, 3, rng);
    const auto e = random_ensemble(d, 3, 3, rng, rng.uniform(0.1, 0.9));
    const auto s = decompose_sample(truth, e);
    REQUIRE(identity_violations(s.maps) == 0);

    double pb = 0, pv = 0, pl = 0, tb = 0, tv = 0, tl = 0, psv = 0;
    int np = 0;
    for (int i = 0; i < 9; ++i) {
      int ones = 0;
      for (const auto& p : e.predictions()) ones += p[static_cast<std::size_t>(i)];
      const int y = 2 * ones > d ? 1 : 0;
      const int var = y ? d - ones : ones;
      const int loss = truth[static_cast<std::size_t>(i)] ? d - ones : ones;
      const int bias = y != truth[static_cast<std::size_t>(i)];
      CHECK(s.maps.main[static_cast<std::size_t>(i)] == y);
      CHECK(s.maps.variance_count[static_cast<std::size_t>(i)] == var);
      CHECK(s.maps.loss_count[static_cast<std::size_t>(i)] == loss);
      tb += bias;
      tv += static_cast<double>(var) / d;
      tl += static_cast<double>(loss) / d;
      if (truth[static_cast<std::size_t>(i)]) {
        ++np;
        pb += bias;
        pv += static_cast<double>(var) / d;
        pl += static_cast<double>(loss) / d;
        psv += (bias ? -1.0 : 1.0) * var / d;
      }
    }
    CHECK(s.expectations.total.bias == doctest::Approx(tb / 9));
    CHECK(s.expectations.total.variance == doctest::Approx(tv / 9));
    CHECK(s.expectations.total.loss == doctest::Approx(tl / 9));
    if (np == 0) {
      CHECK_FALSE(s.expectations.positive.has_value());
    } else {
      REQUIRE(s.expectations.positive.has_value());
      CHECK(s.expectations.positive->bias == doctest::Approx(pb / np));
      CHECK(s.expectations.positive->variance == doctest::Approx(pv / np));
      CHECK(s.expectations.positive->loss == doctest::Approx(pl / np));
      CHECK(s.expectations.positive->signed_variance == doctest::Approx(psv / np));
    }
  }
}

TEST_CASE("permuting the ensemble changes no map") {
  Rng rng(5);
  for (int c = 0; c < 50; ++c) {
    const auto truth = testing::random_mask(10, 7, rng);
    const auto e = random_ensemble(9, 10, 7, rng);
    auto perm = e.predictions();
    rng.shuffle(std::span(perm));
    const auto a = decompose(truth, e);
    const auto b = decompose(truth, PredictionEnsemble("x", perm));
    CHECK(a.main == b.main);
    CHECK(a.bias == b.bias);
    CHECK(a.variance_count == b.variance_count);
    CHECK(a.loss_count == b.loss_count);
  }
}

TEST_CASE("whole-image expectation is the pixel-weighted mean of the regions") {
  Rng rng(6);
  for (int c = 0; c < 50; ++c) {
    const auto truth = testing::random_mask(16, 16, rng, 0.2);
    const auto s = decompose_sample(truth, random_ensemble(9, 16, 16, rng, 0.3)).expectations;
    REQUIRE(s.positive.has_value());
    REQUIRE(s.negative.has_value());
    const double np = static_cast<double>(s.positive_pixels), nn = static_cast<double>(s.negative_pixels);
    auto mix = [&](double pos, double neg) { return (np * pos + nn * neg) / (np + nn); };
    CHECK(std::abs(s.total.bias - mix(s.positive->bias, s.negative->bias)) < 1e-12);
    CHECK(std::abs(s.total.variance - mix(s.positive->variance, s.negative->variance)) < 1e-12);
    CHECK(std::abs(s.total.loss - mix(s.positive->loss, s.negative->loss)) < 1e-12);
    CHECK(std::abs(s.total.bias + s.total.signed_variance - s.total.loss) < 1e-12);
  }
}

TEST_CASE("roi expectation") {
  CHECK(roi_expectation(ValueMap(3, 3, 0.25), BinaryMask(3, 3, 1)) == 0.25);
  ValueMap m(2, 1);
  m[1] = 1.0;
  CHECK(roi_expectation(m, BinaryMask(2, 1, 1)) == 0.5);
  try {
    roi_expectation(m, BinaryMask(2, 1, 0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("summary table") {
  SampleExpectations a, b;
  a.id = "a";
  b.id = "b";
  a.positive = Expectations{0.1, 0.2, 0.2, 0.3};
  b.positive = Expectations{0.1, 0.4, 0.4, 0.5};
  a.total = *a.positive;
  b.total = *b.positive;
  const std::vector<SampleExpectations> rows{a, b};
  const auto s = summarize_table("k", rows);
  CHECK(s.pos_variance.mean == doctest::Approx(0.3));
  CHECK(*s.pos_variance.std == doctest::Approx(0.1414).epsilon(1e-3));
  CHECK(s.pos_variance.n == 2);

  const auto one = summarize_table("k", std::span(rows).first(1));
  CHECK(one.pos_variance.mean == doctest::Approx(0.2));
  CHECK_FALSE(one.pos_variance.std.has_value());

  SampleExpectations empty;
  empty.id = "c";
  const std::vector<SampleExpectations> with_empty{a, b, empty};
  const auto e = summarize_table("k", with_empty);
  CHECK(e.excluded_positive == 1);
  CHECK(e.pos_variance.n == 2);
  CHECK(e.total_variance.n == 3);
}

TEST_CASE("kind comparisons pair samples by id") {
  Rng rng(7);
  std::vector<SampleExpectations> a, b;
  for (int i = 0; i < 6; ++i) {
    const auto truth = testing::random_mask(8, 8, rng, 0.4);
    auto sa = decompose_sample(truth, random_ensemble(3, 8, 8, rng)).expectations;
    auto sb = decompose_sample(truth, random_ensemble(3, 8, 8, rng)).expectations;
    sa.id = sb.id = "s" + std::to_string(i);
    a.push_back(sa);
    b.push_back(sb);
  }
  std::reverse(b.begin(), b.end());
  const std::vector<std::pair<std::string, std::vector<SampleExpectations>>> kinds{{"a", a}, {"b", b}};
  const auto cmp = compare_kinds(kinds);
  CHECK(cmp.size() == 6);  // two regions x three quantities
  for (const auto& c : cmp) {
    CHECK(c.kind_a == "a");
    if (c.test) CHECK(c.test->n == 6);
  }
}
