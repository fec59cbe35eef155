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

#include "segvar/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "fileio.hpp"

namespace segvar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorCode::Config, "config key '" + key + "': cannot parse '" + v + "' as a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::Config, "config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::string body = trim(v);
  if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<std::string>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", \"" : "\"") + xs[i] + "\"";
  return s + "]";
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SEGVAR_FIELD(type, expr)                                                                     \
  Field {                                                                                            \
    [](ExperimentConfig& c, const std::string& v) { c.expr = parse_number<type>(#expr, v); },        \
        [](const ExperimentConfig& c) { return num(static_cast<double>(c.expr)); }                  \
  }
#define SEGVAR_BOOL(expr)                                                                            \
  Field {                                                                                            \
    [](ExperimentConfig& c, const std::string& v) { c.expr = parse_bool(#expr, v); },                \
        [](const ExperimentConfig& c) { return std::string(c.expr ? "true" : "false"); }            \
  }

const std::map<std::string, Field>& registry() {
  static const std::map<std::string, Field> fields = {
      {"experiment.seed", SEGVAR_FIELD(std::uint64_t, seed)},
      {"experiment.jobs", SEGVAR_FIELD(int, jobs)},
      {"experiment.eval_size", SEGVAR_FIELD(int, eval_size)},
      {"experiment.run_crossval", SEGVAR_BOOL(run_crossval)},
      {"experiment.test_rescale_min", SEGVAR_FIELD(double, test_rescale_min)},
      {"experiment.test_rescale_max", SEGVAR_FIELD(double, test_rescale_max)},
      {"experiment.biasvar_kinds",
       {[](ExperimentConfig& c, const std::string& v) { c.biasvar_kinds = parse_list(v); },
        [](const ExperimentConfig& c) { return list(c.biasvar_kinds); }}},
      {"experiment.eval_kinds",
       {[](ExperimentConfig& c, const std::string& v) { c.eval_kinds = parse_list(v); },
        [](const ExperimentConfig& c) { return list(c.eval_kinds); }}},

      {"synth.image_size", SEGVAR_FIELD(int, synth.image_size)},
      {"synth.n_patients", SEGVAR_FIELD(int, synth.n_patients)},
      {"synth.slices_per_patient", SEGVAR_FIELD(int, synth.slices_per_patient)},
      {"synth.depth", SEGVAR_FIELD(int, synth.depth)},
      {"synth.radius_min", SEGVAR_FIELD(double, synth.radius_min)},
      {"synth.radius_max", SEGVAR_FIELD(double, synth.radius_max)},
      {"synth.wall_min", SEGVAR_FIELD(double, synth.wall_min)},
      {"synth.wall_max", SEGVAR_FIELD(double, synth.wall_max)},
      {"synth.tumor_extent_min", SEGVAR_FIELD(double, synth.tumor_extent_min)},
      {"synth.tumor_extent_max", SEGVAR_FIELD(double, synth.tumor_extent_max)},
      {"synth.tumor_inward_min", SEGVAR_FIELD(double, synth.tumor_inward_min)},
      {"synth.tumor_inward_max", SEGVAR_FIELD(double, synth.tumor_inward_max)},
      {"synth.bulge_probability", SEGVAR_FIELD(double, synth.bulge_probability)},
      {"synth.bulge_max", SEGVAR_FIELD(double, synth.bulge_max)},
      {"synth.distractor_probability", SEGVAR_FIELD(double, synth.distractor_probability)},
      {"synth.noise_std", SEGVAR_FIELD(double, synth.noise_std)},
      {"synth.background_level", SEGVAR_FIELD(double, synth.background_level)},
      {"synth.body_level", SEGVAR_FIELD(double, synth.body_level)},
      {"synth.lumen_level", SEGVAR_FIELD(double, synth.lumen_level)},
      {"synth.wall_level", SEGVAR_FIELD(double, synth.wall_level)},
      {"synth.tumor_level", SEGVAR_FIELD(double, synth.tumor_level)},
      {"synth.gain_jitter", SEGVAR_FIELD(double, synth.gain_jitter)},
      {"synth.slice_rotation_max", SEGVAR_FIELD(double, synth.slice_rotation_max)},
      {"synth.slice_shift_max", SEGVAR_FIELD(double, synth.slice_shift_max)},

      {"preprocess.tiles_x", SEGVAR_FIELD(int, clahe.tiles_x)},
      {"preprocess.tiles_y", SEGVAR_FIELD(int, clahe.tiles_y)},
      {"preprocess.clip_factor", SEGVAR_FIELD(double, clahe.clip_factor)},
      {"preprocess.window",
       {[](ExperimentConfig& c, const std::string& v) {
          const auto xs = parse_list(v);
          if (xs.empty()) {
            c.window.reset();
            return;
          }
          if (xs.size() != 2) fail(ErrorCode::Config, "preprocess.window expects [lo, hi]");
          c.window = WindowParams{parse_number<double>("preprocess.window", xs[0]),
                                  parse_number<double>("preprocess.window", xs[1])};
        },
        [](const ExperimentConfig& c) {
          return c.window ? "[" + num(c.window->lo) + ", " + num(c.window->hi) + "]" : std::string("[]");
        }}},

      {"augment.scale_min", SEGVAR_FIELD(int, augment.scale_min)},
      {"augment.scale_max", SEGVAR_FIELD(int, augment.scale_max)},
      {"augment.scale_step", SEGVAR_FIELD(int, augment.scale_step)},
      {"augment.brightness", SEGVAR_FIELD(double, augment.brightness)},
      {"augment.contrast", SEGVAR_FIELD(double, augment.contrast)},
      {"augment.sharpness", SEGVAR_FIELD(double, augment.sharpness)},
      {"augment.rotation_max", SEGVAR_FIELD(double, augment.rotation_max)},
      {"augment.crop_max_frac", SEGVAR_FIELD(double, augment.crop_max_frac)},
      {"augment.flip", SEGVAR_BOOL(augment.flip)},

      {"train.learning_rate", SEGVAR_FIELD(double, train.adam.learning_rate)},
      {"train.beta1", SEGVAR_FIELD(double, train.adam.beta1)},
      {"train.beta2", SEGVAR_FIELD(double, train.adam.beta2)},
      {"train.epsilon", SEGVAR_FIELD(double, train.adam.epsilon)},
      {"train.batch_size", SEGVAR_FIELD(int, train.batch_size)},
      {"train.epochs", SEGVAR_FIELD(int, train.epochs)},
      {"train.tumor_weight", SEGVAR_FIELD(double, train.tumor_weight)},
      {"train.rectum_weight", SEGVAR_FIELD(double, train.rectum_weight)},
      {"train.threshold", SEGVAR_FIELD(double, train.threshold)},
      {"train.channels", SEGVAR_FIELD(int, train.channels)},
      {"train.cosine_decay", SEGVAR_BOOL(train.cosine_decay)},

      {"split.test_frac", SEGVAR_FIELD(double, test_frac)},
      {"split.n_sets", SEGVAR_FIELD(int, n_sets)},
      {"split.kfolds", SEGVAR_FIELD(int, kfolds)},
      {"split.group_by_patient", SEGVAR_BOOL(group_by_patient)},

      {"render.alpha", SEGVAR_FIELD(double, render_alpha)},
      {"render.samples", SEGVAR_FIELD(int, render_samples)},
      {"render.crop",
       {[](ExperimentConfig& c, const std::string& v) {
          const auto xs = parse_list(v);
          if (xs.empty()) {
            c.render_crop.reset();
            return;
          }
          if (xs.size() != 4) fail(ErrorCode::Config, "render.crop expects [x0, y0, w, h]");
          c.render_crop = RoiBox{parse_number<int>("render.crop", xs[0]), parse_number<int>("render.crop", xs[1]),
                                 parse_number<int>("render.crop", xs[2]), parse_number<int>("render.crop", xs[3])};
        },
        [](const ExperimentConfig& c) {
          if (!c.render_crop) return std::string("[]");
          const auto& b = *c.render_crop;
          return "[" + std::to_string(b.x0) + ", " + std::to_string(b.y0) + ", " + std::to_string(b.w) + ", " +
                 std::to_string(b.h) + "]";
        }}},
  };
  return fields;
}

#undef SEGVAR_FIELD
#undef SEGVAR_BOOL

}  // namespace

void ExperimentConfig::validate() const {
  require(jobs >= 1, ErrorCode::Config, "experiment.jobs must be >= 1");
  require(eval_size >= 8, ErrorCode::Config, "experiment.eval_size must be >= 8");
  require(test_rescale_min > 0 && test_rescale_min <= test_rescale_max, ErrorCode::Config,
          "experiment.test_rescale range invalid");
  require(test_frac > 0 && test_frac < 1, ErrorCode::Config, "split.test_frac must be in (0,1)");
  require(n_sets >= 3 && n_sets % 2 == 1, ErrorCode::Config, "split.n_sets must be odd and >= 3");
  require(kfolds >= 2, ErrorCode::Config, "split.kfolds must be >= 2");
  require(render_alpha >= 0 && render_alpha <= 1, ErrorCode::Config, "render.alpha must be in [0,1]");
  require(render_samples >= 0, ErrorCode::Config, "render.samples must be >= 0");
  if (window) require(window->lo < window->hi, ErrorCode::Config, "preprocess.window needs lo < hi");
  synth.validate();
  augment.validate();
  train.validate();
  for (const auto* kinds : {&biasvar_kinds, &eval_kinds})
    for (const auto& k : *kinds)
      require(k == "srsn-tumor" || k == "srsn-rectum" || k == "mrsn" || k == "mrsn-aug", ErrorCode::Config,
              "unknown model kind '" + k + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) fail(ErrorCode::Config, "unknown config key '" + key + "'");
  it->second.set(*this, unquote(trim(value)));
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : registry())
    if (key != "experiment.jobs") out += key + " = " + field.get(*this) + "\n";
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

std::string ExperimentConfig::provenance() const {
  return "config=" + hash() + " seed=" + std::to_string(seed);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Config, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() || key.find('.') != std::string::npos ? key : section + "." + key;
    base.set(full, line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(detail::read_text(path), std::move(base));
}

}  // namespace segvar
