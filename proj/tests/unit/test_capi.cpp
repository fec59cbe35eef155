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

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "segvar.h"

TEST_CASE("c api: status names and version") {
  CHECK(std::string(segvar_status_name(SEGVAR_OK)) == "ok");
  CHECK(std::string(segvar_status_name(SEGVAR_EVEN_ENSEMBLE)) == "even_ensemble");
  CHECK(std::string(segvar_status_name(SEGVAR_MISSING_ARTIFACT)) == "missing_artifact");
  CHECK(std::string(segvar_status_name(static_cast<segvar_status>(99))) == "unknown");
  CHECK(std::strlen(segvar_version()) > 0);
}

TEST_CASE("c api: config handle") {
  segvar_config* cfg = nullptr;
  REQUIRE(segvar_config_new(&cfg) == SEGVAR_OK);
  CHECK(segvar_config_set(cfg, "train.epochs", "5") == SEGVAR_OK);
  CHECK(segvar_config_set(cfg, "train.nope", "5") == SEGVAR_CONFIG);
  CHECK(std::string(segvar_last_error()).find("train.nope") != std::string::npos);
  CHECK(segvar_config_validate(cfg) == SEGVAR_OK);
  char small[4];
  CHECK(segvar_config_hash(cfg, small, sizeof small) == SEGVAR_INVALID_ARGUMENT);
  char buf[17];
  CHECK(segvar_config_hash(cfg, buf, sizeof buf) == SEGVAR_OK);
  CHECK(std::strlen(buf) == 16);
  CHECK(segvar_config_set(cfg, "split.n_sets", "8") == SEGVAR_OK);
  CHECK(segvar_config_validate(cfg) == SEGVAR_CONFIG);
  segvar_config_free(cfg);
  CHECK(segvar_config_new(nullptr) == SEGVAR_INVALID_ARGUMENT);
  CHECK(segvar_config_load("/nonexistent/c.toml", &cfg) == SEGVAR_MISSING_ARTIFACT);
}

TEST_CASE("c api: masks, metrics and decomposition") {
  const std::vector<std::uint8_t> t{1, 1, 0, 0}, p{1, 0, 1, 0};
  segvar_mask *truth = nullptr, *pred = nullptr;
  REQUIRE(segvar_mask_new(2, 2, t.data(), &truth) == SEGVAR_OK);
  REQUIRE(segvar_mask_new(2, 2, p.data(), &pred) == SEGVAR_OK);
  segvar_confusion c{};
  CHECK(segvar_confusion_counts(pred, truth, &c) == SEGVAR_OK);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fn == 1);
  double d = 0;
  CHECK(segvar_dsc(pred, truth, &d) == SEGVAR_OK);
  CHECK(d == 0.5);

  const segvar_mask* four[] = {pred, pred, truth, truth};
  segvar_decomposition* dec = nullptr;
  CHECK(segvar_decompose(truth, four, 4, &dec) == SEGVAR_EVEN_ENSEMBLE);
  CHECK(segvar_decompose(truth, four, 3, &dec) == SEGVAR_OK);
  CHECK(segvar_decomposition_ensemble_size(dec) == 3);
  // Members: p, p, t. Main = p. Pixel 1 and 2 are biased with one dissenting vote.
  const std::uint16_t* var = segvar_decomposition_variance_counts(dec);
  const std::uint16_t* loss = segvar_decomposition_loss_counts(dec);
  CHECK(std::vector<std::uint16_t>(var, var + 4) == std::vector<std::uint16_t>{0, 1, 1, 0});
  CHECK(std::vector<std::uint16_t>(loss, loss + 4) == std::vector<std::uint16_t>{0, 2, 2, 0});
  segvar_expectations pos{};
  CHECK(segvar_decomposition_expectations(dec, SEGVAR_REGION_POSITIVE, &pos) == SEGVAR_OK);
  CHECK(pos.bias == 0.5);
  CHECK(pos.variance == doctest::Approx(1.0 / 6.0));
  CHECK(pos.loss == doctest::Approx(1.0 / 3.0));
  CHECK(pos.bias + pos.signed_variance == doctest::Approx(pos.loss));
  segvar_decomposition_free(dec);

  testing::TempDir dir("capi");
  const std::string path = (dir / "m.pgm").string();
  CHECK(segvar_mask_save(truth, path.c_str()) == SEGVAR_OK);
  segvar_mask* back = nullptr;
  CHECK(segvar_mask_load(path.c_str(), &back) == SEGVAR_OK);
  CHECK(segvar_mask_width(back) == 2);
  CHECK(std::memcmp(segvar_mask_pixels(back), t.data(), 4) == 0);
  segvar_mask_free(back);
  segvar_mask_free(pred);
  segvar_mask_free(truth);
}

TEST_CASE("c api: paired t-test") {
  const double a[] = {1, 2, 3}, b[] = {2, 4, 6};
  segvar_ttest r{};
  CHECK(segvar_paired_t_test(a, b, 3, &r) == SEGVAR_OK);
  CHECK(std::abs(r.t + 2.0 * std::sqrt(3.0)) < 1e-12);
  CHECK(segvar_paired_t_test(a, a, 3, &r) == SEGVAR_DEGENERATE_VARIANCE);
}
