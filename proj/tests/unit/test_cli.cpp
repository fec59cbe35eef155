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

#include <sys/wait.h>

#include <cstdio>

#include "helpers.hpp"

using namespace segvar;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SEGVAR_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.output += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// predictions/ with `sets` ensemble members for one kind and two test ids.
void fake_predictions(const std::filesystem::path& root, int sets) {
  const auto preds = root / "predictions";
  std::filesystem::create_directories(preds / "inputs");
  testing::write_bytes(preds / "tests.json", R"({"provenance": "x", "ids": ["a", "b"]})");
  Rng rng(1);
  for (const char* id : {"a", "b"}) {
    save_pnm(testing::random_image(8, 8, 8, rng), preds / "inputs" / (std::string(id) + "_image.pgm"));
    save_pnm(testing::random_mask(8, 8, rng), preds / "inputs" / (std::string(id) + "_tumor.pgm"));
    save_pnm(testing::random_mask(8, 8, rng), preds / "inputs" / (std::string(id) + "_rectum.pgm"));
    for (int k = 0; k < sets; ++k) {
      const auto dir = preds / "ensembles" / "mrsn" / ("set" + std::to_string(k));
      std::filesystem::create_directories(dir);
      save_pnm(testing::random_mask(8, 8, rng), dir / (std::string(id) + ".pgm"));
    }
  }
}

}  // namespace

TEST_CASE("cli: biasvar accepts three members and rejects four") {
  testing::TempDir three("cli_bv3"), four("cli_bv4");
  fake_predictions(three.path(), 3);
  fake_predictions(four.path(), 4);

  const auto ok = run_cli("biasvar --out " + three.path().string());
  CHECK(ok.code == 0);
  CHECK(std::filesystem::exists(three / "biasvar/mrsn/expectations.tsv"));
  CHECK(std::filesystem::exists(three / "biasvar/summary.tsv"));

  const auto bad = run_cli("biasvar --out " + four.path().string());
  CHECK(bad.code == 11);
  CHECK(bad.output.find("code=even_ensemble") != std::string::npos);
}

TEST_CASE("cli: evaluate without trained models names the missing path") {
  testing::TempDir root("cli_eval");
  const std::string common = " --out " + root.path().string() + " --set synth.n_patients=10 --set split.kfolds=5";
  for (const char* stage : {"synth", "preprocess", "split"}) {
    const auto r = run_cli(std::string(stage) + common);
    REQUIRE_MESSAGE(r.code == 0, r.output);
  }
  const auto r = run_cli("evaluate" + common);
  CHECK(r.code == 12);
  CHECK(r.output.find("code=missing_artifact") != std::string::npos);
  CHECK(r.output.find((root / "cv_models").string()) != std::string::npos);
}

TEST_CASE("cli: argument and config errors") {
  const auto none = run_cli("");
  CHECK(none.code == 1);
  const auto bogus = run_cli("train --set train.nonsense=1 --out /nonexistent-segvar");
  CHECK(bogus.code == 13);
  CHECK(bogus.output.find("code=config") != std::string::npos);
  const auto even = run_cli("split --set split.n_sets=4 --out /nonexistent-segvar");
  CHECK(even.code == 13);
  CHECK(run_cli("--version").output.find("1.0.0") != std::string::npos);
}
