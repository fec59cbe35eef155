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

// segvar command-line front end. Talks to the toolkit only through segvar.h.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segvar.h"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<long long> seed;
  std::optional<int> jobs;
  std::string out;
  std::string input;
  std::vector<std::string> overrides;
  bool cv = false;
  bool montage = false;
};

void add_common(CLI::App& app, CommonArgs& a) {
  app.add_option("--config", a.config, "Experiment config file (TOML subset)");
  app.add_option("--seed", a.seed, "Root seed");
  app.add_option("--jobs", a.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", a.out, "Output root (default $SEGVAR_OUT or ./segvar_out)");
  app.add_option("--set", a.overrides, "Config override key=value (repeatable)");
}

int report(segvar_status st) {
  std::fprintf(stderr, "error: code=%s message=%s\n", segvar_status_name(st), segvar_last_error());
  return static_cast<int>(st);
}

int run(const std::string& stage, const CommonArgs& a) {
  segvar_config* cfg = nullptr;
  segvar_status st = a.config.empty() ? segvar_config_new(&cfg) : segvar_config_load(a.config.c_str(), &cfg);
  if (st != SEGVAR_OK) return report(st);

  auto set = [&](const std::string& key, const std::string& value) {
    if (st == SEGVAR_OK) st = segvar_config_set(cfg, key.c_str(), value.c_str());
  };
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      segvar_config_free(cfg);
      std::fprintf(stderr, "error: code=config message=override '%s' is not key=value\n", kv.c_str());
      return SEGVAR_CONFIG;
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) set("experiment.seed", std::to_string(*a.seed));
  if (a.jobs) set("experiment.jobs", std::to_string(*a.jobs));

  std::string root = a.out;
  if (root.empty()) {
    const char* env = std::getenv("SEGVAR_OUT");
    root = env != nullptr && *env != '\0' ? env : "segvar_out";
  }
  if (st == SEGVAR_OK) {
    segvar_stage_options opt{root.c_str(), a.input.empty() ? nullptr : a.input.c_str(), a.cv ? 1 : 0,
                             a.montage ? 1 : 0};
    st = segvar_run_stage(cfg, stage.c_str(), &opt);
  }
  const int code = st == SEGVAR_OK ? 0 : report(st);
  segvar_config_free(cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segvar: segmentation bias-variance toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", segvar_version());

  CommonArgs args;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "Generate the synthetic dataset"},
      {"preprocess", "Window, equalize and resize images"},
      {"split", "Write holdout/training-set and k-fold plans"},
      {"train", "Train one model per training set (or per fold with --cv)"},
      {"predict", "Predict the test set with every trained model"},
      {"biasvar", "Decompose ensemble predictions into bias and variance"},
      {"evaluate", "Cross-validated DSC/sensitivity/specificity with paired t-tests"},
      {"render", "Render variance/bias/loss overlays"},
      {"pipeline", "Run every stage in order"},
  };
  std::string chosen;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(*sub, args);
    sub->add_option("--input", args.input, "Upstream artifact directory override");
    if (std::string(s.name) == "train") sub->add_flag("--cv", args.cv, "Train cross-validation fold models");
    if (std::string(s.name) == "render") sub->add_flag("--montage", args.montage, "Also tile ensemble predictions");
    sub->callback([&chosen, s] { chosen = s.name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::fprintf(stderr, "error: code=invalid_argument message=%s\n", e.what());
      return SEGVAR_INVALID_ARGUMENT;
    }
    return app.exit(e);
  }
  return run(chosen, args);
}
