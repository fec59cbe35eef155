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

#include "segvar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace segvar {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<GrayImage> preprocess_patient(std::span<const GrayImage> slices, const ClaheParams& clahe_params,
                                          const std::optional<WindowParams>& window) {
  const WindowParams w = window ? *window : compute_window(slices);
  std::vector<GrayImage> out;
  out.reserve(slices.size());
  for (const auto& s : slices) out.push_back(clahe(apply_window(s, w), clahe_params));
  return out;
}

const SegItem& Dataset::item(const std::string& id) const {
  for (const auto& s : samples)
    if (s.id == id) return s.item;
  fail(ErrorCode::InvalidArgument, "unknown sample id '" + id + "'");
}

Dataset prepare_dataset(std::span<const SynthSample> raw, const ExperimentConfig& cfg) {
  require(!raw.empty(), ErrorCode::EmptyInput, "no samples to prepare");
  // Group slices by patient, keeping first-appearance order.
  std::vector<std::string> patients;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& list = members[raw[i].patient];
    if (list.empty()) patients.push_back(raw[i].patient);
    list.push_back(i);
  }
  std::vector<GrayImage> processed(raw.size());
  parallel_for(patients.size(), cfg.jobs, [&](std::size_t p) {
    const auto& idx = members.at(patients[p]);
    std::vector<GrayImage> slices;
    for (auto i : idx) slices.push_back(raw[i].image);
    auto out = preprocess_patient(slices, cfg.clahe, cfg.window);
    for (std::size_t k = 0; k < idx.size(); ++k) processed[idx[k]] = std::move(out[k]);
  });

  Dataset d;
  std::vector<SampleRecord> records;
  const int n = cfg.eval_size;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& r = raw[i];
    records.push_back({r.id, r.patient, "", "", ""});
    SegItem item;
    if (processed[i].width() == n && processed[i].height() == n) {
      item = {std::move(processed[i]), r.rectum, r.tumor};
    } else {
      item = {resample(processed[i], n, n, Interp::Bilinear), resample_mask(r.rectum, n, n),
              resample_mask(r.tumor, n, n)};
    }
    d.samples.push_back({r.id, std::move(item)});
  }
  d.manifest = Manifest(std::move(records));
  return d;
}

std::uint64_t set_seed(std::uint64_t root, std::size_t set) { return derive_seed(root, 0x5e700000ULL + set); }

double test_rescale_factor(const ExperimentConfig& cfg, const std::string& id) {
  if (cfg.test_rescale_min == 1.0 && cfg.test_rescale_max == 1.0) return 1.0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) h = (h ^ c) * 0x100000001b3ULL;
  Rng rng(derive_seed(derive_seed(cfg.seed, 0x5ca1e), h));
  return rng.uniform(cfg.test_rescale_min, cfg.test_rescale_max);
}

std::vector<TestInput> make_test_inputs(const Dataset& data, const IdList& test_ids, const ExperimentConfig& cfg) {
  std::vector<TestInput> out;
  for (const auto& id : test_ids) {
    const SegItem& it = data.item(id);
    const double f = test_rescale_factor(cfg, id);
    if (f == 1.0) {
      out.push_back({id, it.image, it.tumor, it.rectum});
      continue;
    }
    const int w = std::max(8, static_cast<int>(std::lround(it.image.width() * f)));
    const int h = std::max(8, static_cast<int>(std::lround(it.image.height() * f)));
    out.push_back({id, resample(it.image, w, h, Interp::Bilinear), resample_mask(it.tumor, w, h),
                   resample_mask(it.rectum, w, h)});
  }
  return out;
}

ToyNet train_for_set(const Dataset& data, const SplitPlan& plan, std::size_t set, const ModelSpec& spec,
                     const ExperimentConfig& cfg) {
  require(set < plan.training_sets.size(), ErrorCode::OutOfBounds, "training set index out of range");
  std::vector<SegItem> items;
  for (const auto& id : plan.training_sets[set]) items.push_back(data.item(id));
  TrainConfig tc = cfg.train;
  tc.seed = set_seed(cfg.seed, set);
  return train(spec.net, items, tc, spec.augment ? &cfg.augment : nullptr);
}

Task analysis_task(const ModelSpec& spec) {
  return spec.net == NetKind::SrsnRectum ? Task::Rectum : Task::Tumor;
}

std::vector<SampleExpectations> KindResult::expectations() const {
  std::vector<SampleExpectations> out;
  for (const auto& s : samples) out.push_back(s.expectations);
  return out;
}

BiasVarResult decompose_ensembles(std::span<const std::string> kinds,
                                  const std::vector<std::vector<std::vector<BinaryMask>>>& predictions,
                                  std::span<const TestInput> tests, std::span<const Task> tasks) {
  require(predictions.size() == kinds.size() && tasks.size() == kinds.size(), ErrorCode::InvalidArgument,
          "one prediction table and task per kind required");
  BiasVarResult res;
  std::vector<std::pair<std::string, std::vector<SampleExpectations>>> table;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    KindResult kr{kinds[k], {}};
    const auto& sets = predictions[k];
    for (std::size_t t = 0; t < tests.size(); ++t) {
      std::vector<BinaryMask> preds;
      for (const auto& s : sets) {
        require(t < s.size(), ErrorCode::InvalidArgument, "prediction table is missing test samples");
        preds.push_back(s[t]);
      }
      const BinaryMask& truth = tasks[k] == Task::Tumor ? tests[t].tumor : tests[t].rectum;
      auto dec = decompose_sample(truth, PredictionEnsemble(tests[t].id, std::move(preds)));
      kr.samples.push_back(std::move(dec));
    }
    auto rows = kr.expectations();
    res.summaries.push_back(summarize_table(kinds[k], rows));
    table.emplace_back(kinds[k], std::move(rows));
    res.kinds.push_back(std::move(kr));
  }
  res.comparisons = compare_kinds(table);
  return res;
}

std::vector<BiasVarResult> run_biasvar(const Dataset& data, const SplitPlan& plan,
                                       std::span<const std::string> kinds, const ExperimentConfig& cfg,
                                       std::span<const ExperimentConfig> rescale_cfgs) {
  const std::size_t n_sets = plan.training_sets.size();
  std::vector<ModelSpec> specs;
  std::vector<Task> tasks;
  for (const auto& k : kinds) {
    specs.push_back(model_spec_from_string(k));
    tasks.push_back(analysis_task(specs.back()));
  }
  std::vector<std::vector<TestInput>> inputs;
  for (const auto& rc : rescale_cfgs) inputs.push_back(make_test_inputs(data, plan.test_ids, rc));

  // preds[variant][kind][set][test]
  std::vector<std::vector<std::vector<std::vector<BinaryMask>>>> preds(
      rescale_cfgs.size(),
      std::vector<std::vector<std::vector<BinaryMask>>>(kinds.size(), std::vector<std::vector<BinaryMask>>(n_sets)));
  parallel_for(kinds.size() * n_sets, cfg.jobs, [&](std::size_t job) {
    const std::size_t k = job / n_sets, s = job % n_sets;
    const ToyNet net = train_for_set(data, plan, s, specs[k], cfg);
    for (std::size_t v = 0; v < inputs.size(); ++v)
      for (const auto& t : inputs[v])
        preds[v][k][s].push_back(predict_mask(net, t.image, tasks[k], cfg.train.threshold));
  });

  std::vector<BiasVarResult> out;
  for (std::size_t v = 0; v < inputs.size(); ++v)
    out.push_back(decompose_ensembles(kinds, preds[v], inputs[v], tasks));
  return out;
}

}  // namespace segvar
