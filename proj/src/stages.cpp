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

#include "segvar/stages.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "fileio.hpp"
#include "segvar/render.hpp"

namespace segvar {

namespace fs = std::filesystem;
using detail::ensure_dir;
using detail::read_text;
using detail::write_text;

namespace {

constexpr std::uint64_t kSynthStream = 0x5e7d;
constexpr std::uint64_t kKfoldStream = 0xcf01d;

fs::path upstream(const StageOptions& opt, const char* sub) { return opt.input ? *opt.input : opt.root / sub; }

void stamp(const ExperimentConfig& cfg, const fs::path& dir) {
  write_text(dir / "provenance.txt", cfg.provenance() + "\n");
}

// Entries of `dir` named <prefix><index><suffix>, ordered by index.
std::vector<std::pair<int, fs::path>> indexed_entries(const fs::path& dir, const std::string& prefix,
                                                      const std::string& suffix, bool directories) {
  std::vector<std::pair<int, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories != e.is_directory()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() <= prefix.size() + suffix.size() || name.rfind(prefix, 0) != 0 ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    out.emplace_back(std::stoi(digits), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Kind subdirectories, in configured order first and then by name.
std::vector<std::string> kind_dirs(const fs::path& dir, const std::vector<std::string>& preferred) {
  require(fs::is_directory(dir), ErrorCode::MissingArtifact, "missing artifact " + dir.string());
  std::vector<std::string> found;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) found.push_back(e.path().filename().string());
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (const auto& k : preferred)
    if (std::find(found.begin(), found.end(), k) != found.end()) out.push_back(k);
  for (const auto& k : found)
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  require(!out.empty(), ErrorCode::MissingArtifact, "no model kinds under " + dir.string());
  return out;
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  for (const char* sub : {"images", "masks_rectum", "masks_tumor"}) ensure_dir(dir / sub);
  std::vector<SampleRecord> records;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    const auto& src = d.manifest.records()[i];
    SampleRecord rec{s.id, src.patient, "images/" + s.id + ".pgm", "masks_rectum/" + s.id + ".pgm",
                     "masks_tumor/" + s.id + ".pgm"};
    save_pnm(s.item.image, dir / rec.image);
    save_pnm(s.item.rectum, dir / rec.rectum_mask);
    save_pnm(s.item.tumor, dir / rec.tumor_mask);
    records.push_back(std::move(rec));
  }
  save_manifest(Manifest(std::move(records), dir), dir / "manifest.jsonl");
}

std::vector<std::string> read_test_ids(const fs::path& predictions) {
  const auto j = nlohmann::json::parse(read_text(predictions / "tests.json"), nullptr, false);
  require(!j.is_discarded() && j.contains("ids") && j["ids"].is_array(), ErrorCode::Format,
          "malformed " + (predictions / "tests.json").string());
  return j["ids"].get<std::vector<std::string>>();
}

std::string model_file(const std::string& prefix, std::size_t k) { return prefix + std::to_string(k) + ".bin"; }

ValueMap count_map(const GrayImage& counts, int ensemble_size) {
  ValueMap out(counts.width(), counts.height());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / ensemble_size;
  return out;
}

GrayImage counts_image(const std::vector<std::uint16_t>& counts, int w, int h) {
  GrayImage out(w, h, 8);
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i];
  return out;
}

ColorImage overlay(const GrayImage& base, const ValueMap& values, const BinaryMask& tumor, const BinaryMask& rectum,
                   const ExperimentConfig& cfg) {
  RenderSpec spec{base, values, cfg.render_alpha, std::nullopt};
  BinaryMask t = tumor, r = rectum;
  if (cfg.render_crop && box_inside(*cfg.render_crop, base.width(), base.height())) {
    spec.crop = cfg.render_crop;
    t = crop(tumor, *cfg.render_crop);
    r = crop(rectum, *cfg.render_crop);
  }
  const ColorImage painted = render_map(spec);
  const Contour contours[] = {{&r, kRectumColor}, {&t, kTumorColor}};
  return render_contours(painted, contours);
}

}  // namespace

SynthConfig seeded_synth(const ExperimentConfig& cfg) {
  SynthConfig s = cfg.synth;
  s.seed = derive_seed(cfg.seed, kSynthStream);
  return s;
}

Dataset load_dataset(const fs::path& manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);
  for (const auto& rec : d.manifest.records())
    d.samples.push_back(
        {rec.id, {d.manifest.load_image(rec), d.manifest.load_rectum(rec), d.manifest.load_tumor(rec)}});
  return d;
}

void stage_synth(const ExperimentConfig& cfg, const StageOptions& opt) {
  const fs::path out = opt.root / "data";
  gen_dataset(seeded_synth(cfg), out);
  stamp(cfg, out);
}

void stage_preprocess(const ExperimentConfig& cfg, const StageOptions& opt) {
  const Manifest m = load_manifest(upstream(opt, "data") / "manifest.jsonl");
  std::vector<SynthSample> raw;
  for (const auto& rec : m.records()) {
    SynthSample s;
    s.id = rec.id;
    s.patient = rec.patient;
    s.image = m.load_image(rec);
    s.rectum = m.load_rectum(rec);
    s.tumor = m.load_tumor(rec);
    raw.push_back(std::move(s));
  }
  const fs::path out = opt.root / "prep";
  save_dataset(prepare_dataset(raw, cfg), out);
  stamp(cfg, out);
}

void stage_split(const ExperimentConfig& cfg, const StageOptions& opt) {
  const Manifest m = load_manifest(upstream(opt, "prep") / "manifest.jsonl");
  const fs::path out = opt.root / "splits";
  ensure_dir(out);
  save_split_plan(make_split_plan(m, cfg.test_frac, cfg.n_sets, cfg.seed, cfg.group_by_patient), out / "holdout.json");
  save_kfold_plan(kfold(m.ids(), cfg.kfolds, derive_seed(cfg.seed, kKfoldStream), &m, cfg.group_by_patient),
                  out / "kfold.json");
  stamp(cfg, out);
}

void stage_train(const ExperimentConfig& cfg, const StageOptions& opt) {
  const Dataset data = load_dataset(upstream(opt, "prep") / "manifest.jsonl");
  const std::vector<std::string>& kinds = opt.cv ? cfg.eval_kinds : cfg.biasvar_kinds;
  std::vector<ModelSpec> specs;
  for (const auto& k : kinds) specs.push_back(model_spec_from_string(k));
  const fs::path out = opt.root / (opt.cv ? "cv_models" : "models");
  for (const auto& k : kinds) ensure_dir(out / k);

  if (!opt.cv) {
    const SplitPlan plan = load_split_plan(opt.root / "splits" / "holdout.json");
    const std::size_t n = plan.training_sets.size();
    parallel_for(specs.size() * n, cfg.jobs, [&](std::size_t job) {
      const std::size_t k = job / n, s = job % n;
      const ToyNet net = train_for_set(data, plan, s, specs[k], cfg);
      save_model(net, {set_seed(cfg.seed, s), cfg.hash(), kinds[k] + "/set" + std::to_string(s)},
                 out / kinds[k] / model_file("set", s));
    });
  } else {
    const KfoldPlan plan = load_kfold_plan(opt.root / "splits" / "kfold.json");
    const std::size_t n = plan.folds.size();
    parallel_for(specs.size() * n, cfg.jobs, [&](std::size_t job) {
      const std::size_t k = job / n, f = job % n;
      std::vector<SegItem> items;
      for (const auto& id : training_ids_for_fold(plan, f)) items.push_back(data.item(id));
      TrainConfig tc = cfg.train;
      tc.seed = fold_seed(cfg.seed, f);
      const ToyNet net = train(specs[k].net, items, tc, specs[k].augment ? &cfg.augment : nullptr);
      save_model(net, {tc.seed, cfg.hash(), kinds[k] + "/fold" + std::to_string(f)},
                 out / kinds[k] / model_file("fold", f));
    });
  }
  stamp(cfg, out);
}

void stage_predict(const ExperimentConfig& cfg, const StageOptions& opt) {
  const fs::path models = upstream(opt, "models");
  const Dataset data = load_dataset(opt.root / "prep" / "manifest.jsonl");
  const SplitPlan plan = load_split_plan(opt.root / "splits" / "holdout.json");
  const auto tests = make_test_inputs(data, plan.test_ids, cfg);
  const auto kinds = kind_dirs(models, cfg.biasvar_kinds);

  const fs::path out = opt.root / "predictions";
  ensure_dir(out / "inputs");
  nlohmann::ordered_json manifest;
  manifest["provenance"] = cfg.provenance();
  manifest["ids"] = plan.test_ids;
  write_text(out / "tests.json", manifest.dump(2) + "\n");
  for (const auto& t : tests) {
    save_pnm(t.image, out / "inputs" / (t.id + "_image.pgm"));
    save_pnm(t.tumor, out / "inputs" / (t.id + "_tumor.pgm"));
    save_pnm(t.rectum, out / "inputs" / (t.id + "_rectum.pgm"));
  }

  for (const auto& kind : kinds) {
    const Task task = analysis_task(model_spec_from_string(kind));
    const auto files = indexed_entries(models / kind, "set", ".bin", false);
    require(!files.empty(), ErrorCode::MissingArtifact,
            "missing artifact " + (models / kind / model_file("set", 0)).string());
    parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
      const ToyNet net = load_model(files[i].second);
      const fs::path dir = out / "ensembles" / kind / ("set" + std::to_string(files[i].first));
      ensure_dir(dir);
      for (const auto& t : tests) save_pnm(predict_mask(net, t.image, task, cfg.train.threshold), dir / (t.id + ".pgm"));
    });
  }
  stamp(cfg, out);
}

void stage_biasvar(const ExperimentConfig& cfg, const StageOptions& opt) {
  const fs::path preds = upstream(opt, "predictions");
  const auto ids = read_test_ids(preds);
  const auto kinds = kind_dirs(preds / "ensembles", cfg.biasvar_kinds);
  const fs::path out = opt.root / "biasvar";

  std::vector<ExpectationSummary> summaries;
  std::vector<std::pair<std::string, std::vector<SampleExpectations>>> table;
  for (const auto& kind : kinds) {
    const Task task = analysis_task(model_spec_from_string(kind));
    const auto sets = indexed_entries(preds / "ensembles" / kind, "set", "", true);
    const fs::path dir = out / kind;
    ensure_dir(dir / "maps");
    std::vector<SampleExpectations> rows(ids.size());
    int ensemble_size = 0;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const auto& id = ids[t];
      std::vector<BinaryMask> members;
      for (const auto& [k, set_dir] : sets) members.push_back(load_mask(set_dir / (id + ".pgm")));
      const BinaryMask truth =
          load_mask(preds / "inputs" / (id + (task == Task::Tumor ? "_tumor.pgm" : "_rectum.pgm")));
      const PredictionEnsemble ensemble(id, std::move(members));
      ensemble_size = ensemble.size();
      const auto dec = decompose_sample(truth, ensemble);
      rows[t] = dec.expectations;
      const auto& m = dec.maps;
      save_pnm(m.main, dir / "maps" / (id + "_main.pgm"));
      save_pnm(m.bias, dir / "maps" / (id + "_bias.pgm"));
      save_pnm(counts_image(m.variance_count, truth.width(), truth.height()), dir / "maps" / (id + "_variance.pgm"));
      save_pnm(counts_image(m.loss_count, truth.width(), truth.height()), dir / "maps" / (id + "_loss.pgm"));
    }
    nlohmann::ordered_json info;
    info["provenance"] = cfg.provenance();
    info["kind"] = kind;
    info["task"] = to_string(task);
    info["ensemble_size"] = ensemble_size;
    info["maps"] = "variance and loss maps hold disagreement counts out of ensemble_size";
    write_text(dir / "ensemble.json", info.dump(2) + "\n");
    write_text(dir / "expectations.json", expectations_json(kind, rows, cfg.provenance()));
    write_text(dir / "expectations.tsv", expectations_tsv(rows, cfg.provenance()));
    summaries.push_back(summarize_table(kind, rows));
    table.emplace_back(kind, std::move(rows));
  }
  const auto comparisons = compare_kinds(table);
  write_text(out / "summary.tsv", summary_tsv(summaries, comparisons, cfg.provenance()));
  write_text(out / "summary.json", summary_json(summaries, comparisons, cfg.provenance()));
}

void stage_evaluate(const ExperimentConfig& cfg, const StageOptions& opt) {
  const fs::path models = upstream(opt, "cv_models");
  const KfoldPlan plan = load_kfold_plan(opt.root / "splits" / "kfold.json");
  std::vector<ModelSpec> specs;
  for (const auto& k : cfg.eval_kinds) {
    specs.push_back(model_spec_from_string(k));
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      const fs::path p = models / k / model_file("fold", f);
      if (!fs::exists(p)) fail(ErrorCode::MissingArtifact, "missing artifact " + p.string());
    }
  }
  const Dataset data = load_dataset(opt.root / "prep" / "manifest.jsonl");
  const double threshold = cfg.train.threshold;
  const SegmenterFactory factory = [&](const ModelSpec& spec, std::size_t fold,
                                       std::span<const SegItem>) -> std::unique_ptr<Segmenter> {
    return std::make_unique<NetSegmenter>(load_model(models / spec.name / model_file("fold", fold)), threshold);
  };
  const auto report = crossval_evaluate(data.samples, plan, specs, factory);
  const fs::path out = opt.root / "eval";
  ensure_dir(out);
  write_text(out / "crossval.tsv", crossval_tsv(report, cfg.provenance()));
  write_text(out / "crossval.json", crossval_json(report, cfg.provenance()));
}

void stage_render(const ExperimentConfig& cfg, const StageOptions& opt) {
  const fs::path bv = upstream(opt, "biasvar");
  const fs::path preds = opt.root / "predictions";
  const auto ids = read_test_ids(preds);
  const auto kinds = kind_dirs(bv, cfg.biasvar_kinds);
  const fs::path out = opt.root / "renders";
  const std::size_t shown = std::min(ids.size(), static_cast<std::size_t>(cfg.render_samples));

  for (const auto& kind : kinds) {
    const auto info = nlohmann::json::parse(read_text(bv / kind / "ensemble.json"), nullptr, false);
    require(!info.is_discarded() && info.contains("ensemble_size"), ErrorCode::Format,
            "malformed " + (bv / kind / "ensemble.json").string());
    const int d = info["ensemble_size"].get<int>();
    require(d >= 1, ErrorCode::Format, "ensemble_size must be positive");
    ensure_dir(out / kind);
    for (std::size_t t = 0; t < shown; ++t) {
      const auto& id = ids[t];
      const GrayImage base = load_gray(preds / "inputs" / (id + "_image.pgm"));
      const BinaryMask tumor = load_mask(preds / "inputs" / (id + "_tumor.pgm"));
      const BinaryMask rectum = load_mask(preds / "inputs" / (id + "_rectum.pgm"));
      const fs::path maps = bv / kind / "maps";
      save_pnm(overlay(base, count_map(load_gray(maps / (id + "_variance.pgm")), d), tumor, rectum, cfg),
               out / kind / (id + "_variance.ppm"));
      save_pnm(overlay(base, count_map(load_gray(maps / (id + "_loss.pgm")), d), tumor, rectum, cfg),
               out / kind / (id + "_loss.ppm"));
      save_pnm(overlay(base, to_values(load_mask(maps / (id + "_bias.pgm"))), tumor, rectum, cfg),
               out / kind / (id + "_bias.ppm"));
    }
    if (opt.montage && !ids.empty()) {
      const auto& id = ids.front();
      const GrayImage base = load_gray(preds / "inputs" / (id + "_image.pgm"));
      const BinaryMask tumor = load_mask(preds / "inputs" / (id + "_tumor.pgm"));
      const BinaryMask rectum = load_mask(preds / "inputs" / (id + "_rectum.pgm"));
      std::vector<ColorImage> tiles;
      for (const auto& [k, dir] : indexed_entries(preds / "ensembles" / kind, "set", "", true))
        tiles.push_back(overlay(base, to_values(load_mask(dir / (id + ".pgm"))), tumor, rectum, cfg));
      require(!tiles.empty(), ErrorCode::MissingArtifact,
              "missing artifact " + (preds / "ensembles" / kind / "set0").string());
      save_pnm(montage(tiles, 3, 1), out / (kind + "_montage.ppm"));
    }
  }
  stamp(cfg, out);
}

void stage_pipeline(const ExperimentConfig& cfg, const StageOptions& opt) {
  ensure_dir(opt.root);
  write_text(opt.root / "config.toml", "# " + cfg.provenance() + "\n" + cfg.canonical());
  StageOptions o{opt.root, std::nullopt, false, false};
  stage_synth(cfg, o);
  stage_preprocess(cfg, o);
  stage_split(cfg, o);
  stage_train(cfg, o);
  stage_predict(cfg, o);
  stage_biasvar(cfg, o);
  if (cfg.run_crossval) {
    o.cv = true;
    stage_train(cfg, o);
    o.cv = false;
    stage_evaluate(cfg, o);
  }
  o.montage = true;
  stage_render(cfg, o);
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",   "preprocess", "split",  "train",   "predict",
                                                 "biasvar", "evaluate",   "render", "pipeline"};
  return names;
}

void run_stage(const std::string& name, const ExperimentConfig& cfg, const StageOptions& opt) {
  cfg.validate();
  static const std::map<std::string, void (*)(const ExperimentConfig&, const StageOptions&)> table = {
      {"synth", stage_synth},     {"preprocess", stage_preprocess}, {"split", stage_split},
      {"train", stage_train},     {"predict", stage_predict},       {"biasvar", stage_biasvar},
      {"evaluate", stage_evaluate}, {"render", stage_render},       {"pipeline", stage_pipeline}};
  const auto it = table.find(name);
  if (it == table.end()) fail(ErrorCode::Config, "unknown stage '" + name + "'");
  it->second(cfg, opt);
}

}  // namespace segvar
