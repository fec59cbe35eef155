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

#include "segvar/metrics.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace segvar {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth) {
  require(pred.same_shape(truth), ErrorCode::ShapeMismatch, "confusion: mask shapes differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double dsc(const ConfusionCounts& c) noexcept {
  const auto denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double dsc(const BinaryMask& pred, const BinaryMask& truth) { return dsc(confusion(pred, truth)); }

double sensitivity(const ConfusionCounts& c) noexcept {
  const auto denom = c.tp + c.fn;
  return denom == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(denom);
}

double specificity(const ConfusionCounts& c) noexcept {
  const auto denom = c.tn + c.fp;
  return denom == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(denom);
}

ModelSpec model_spec_from_string(const std::string& name) {
  if (name == "mrsn-aug") return {name, NetKind::Mrsn, true};
  return {name, net_kind_from_string(name), false};
}

namespace {

MeanStd summarize(const std::vector<double>& xs) { return {mean(xs), sample_std(xs)}; }

std::vector<double> column(const std::vector<SampleMetrics>& rows, double SampleMetrics::*field) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

}  // namespace

CrossvalReport crossval_evaluate(std::span<const EvalSample> data, const KfoldPlan& plan,
                                 std::span<const ModelSpec> specs, const SegmenterFactory& factory) {
  require(!specs.empty(), ErrorCode::InvalidArgument, "crossval_evaluate needs at least one model kind");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.size(); ++i)
    require(index.emplace(data[i].id, i).second, ErrorCode::DuplicateId, "duplicate sample '" + data[i].id + "'");
  std::set<std::string> covered;
  for (const auto& fold : plan.folds)
    for (const auto& id : fold) {
      require(index.contains(id), ErrorCode::InvalidArgument, "k-fold plan references unknown sample '" + id + "'");
      require(covered.insert(id).second, ErrorCode::DuplicateId, "sample '" + id + "' appears in two folds");
    }
  require(covered.size() == data.size(), ErrorCode::InvalidArgument, "k-fold plan does not cover every sample");

  CrossvalReport report;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<SegItem> train_items;
    for (const auto& id : training_ids_for_fold(plan, f)) train_items.push_back(data[index.at(id)].item);
    for (const auto& spec : specs) {
      const auto seg = factory(spec, f, train_items);
      require(seg != nullptr, ErrorCode::Internal, "segmenter factory returned null");
      for (Task t : tasks_of(spec.net)) {
        auto& rows = report.per_sample[{spec.name, t}];
        for (const auto& id : plan.folds[f]) {
          const auto& item = data[index.at(id)].item;
          const BinaryMask& truth = t == Task::Tumor ? item.tumor : item.rectum;
          const auto c = confusion(seg->predict(item.image, t), truth);
          rows.push_back({id, dsc(c), sensitivity(c), specificity(c)});
        }
      }
    }
  }

  for (const auto& spec : specs)
    for (Task t : tasks_of(spec.net)) {
      const auto& rows = report.per_sample.at({spec.name, t});
      EvalRow row;
      row.kind = spec.name;
      row.task = t;
      row.n = rows.size();
      row.dsc = summarize(column(rows, &SampleMetrics::dsc));
      row.sensitivity = summarize(column(rows, &SampleMetrics::sensitivity));
      row.specificity = summarize(column(rows, &SampleMetrics::specificity));
      report.rows.push_back(row);
    }

  const std::pair<const char*, double SampleMetrics::*> metrics[] = {
      {"dsc", &SampleMetrics::dsc},
      {"sensitivity", &SampleMetrics::sensitivity},
      {"specificity", &SampleMetrics::specificity}};
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j)
      for (Task t : {Task::Tumor, Task::Rectum}) {
        const auto a = report.per_sample.find({specs[i].name, t});
        const auto b = report.per_sample.find({specs[j].name, t});
        if (a == report.per_sample.end() || b == report.per_sample.end()) continue;
        for (const auto& [name, field] : metrics) {
          PairedComparison cmp{specs[i].name, specs[j].name, t, name, std::nullopt, ""};
          try {
            cmp.test = paired_t_test(column(a->second, field), column(b->second, field));
          } catch (const Error& e) {
            cmp.note = e.what();
          }
          report.comparisons.push_back(cmp);
        }
      }
  return report;
}

std::uint64_t fold_seed(std::uint64_t root, std::size_t fold) { return derive_seed(root, 0xf01d0000ULL + fold); }

SegmenterFactory training_factory(const TrainConfig& cfg, const AugmentConfig& augment, std::uint64_t seed) {
  return [cfg, augment, seed](const ModelSpec& spec, std::size_t fold,
                              std::span<const SegItem> items) -> std::unique_ptr<Segmenter> {
    TrainConfig c = cfg;
    c.seed = fold_seed(seed, fold);
    ToyNet net = train(spec.net, items, c, spec.augment ? &augment : nullptr);
    return std::make_unique<NetSegmenter>(std::move(net), cfg.threshold);
  };
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

nlohmann::ordered_json to_json(const MeanStd& m) {
  nlohmann::ordered_json j;
  j["mean"] = m.mean;
  j["std"] = m.std ? nlohmann::ordered_json(*m.std) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace

std::string crossval_tsv(const CrossvalReport& r, const std::string& provenance) {
  std::ostringstream os;
  os << "# " << provenance << "\n# std over samples (n-1 denominator)\n";
  os << "kind\ttask\tn\tdsc_mean\tdsc_std\tsens_mean\tsens_std\tspec_mean\tspec_std\n";
  for (const auto& row : r.rows)
    os << row.kind << '\t' << to_string(row.task) << '\t' << row.n << '\t' << fmt(row.dsc.mean) << '\t'
       << fmt(row.dsc.std) << '\t' << fmt(row.sensitivity.mean) << '\t' << fmt(row.sensitivity.std) << '\t'
       << fmt(row.specificity.mean) << '\t' << fmt(row.specificity.std) << '\n';
  os << "\n# paired t-tests on per-sample metrics\nkind_a\tkind_b\ttask\tmetric\tn\tt\tdf\tp\tnote\n";
  for (const auto& c : r.comparisons) {
    os << c.kind_a << '\t' << c.kind_b << '\t' << to_string(c.task) << '\t' << c.metric << '\t';
    if (c.test)
      os << c.test->n << '\t' << fmt(c.test->t) << '\t' << c.test->df << '\t' << fmt(c.test->p) << "\t\n";
    else
      os << "NA\tNA\tNA\tNA\t" << c.note << '\n';
  }
  return os.str();
}

std::string crossval_json(const CrossvalReport& r, const std::string& provenance) {
  nlohmann::ordered_json j;
  j["provenance"] = provenance;
  j["std_over"] = "samples";
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["kind"] = row.kind;
    o["task"] = to_string(row.task);
    o["n"] = row.n;
    o["dsc"] = to_json(row.dsc);
    o["sensitivity"] = to_json(row.sensitivity);
    o["specificity"] = to_json(row.specificity);
    rows.push_back(o);
  }
  auto& cmps = j["paired_t_tests"] = nlohmann::ordered_json::array();
  for (const auto& c : r.comparisons) {
    nlohmann::ordered_json o;
    o["kind_a"] = c.kind_a;
    o["kind_b"] = c.kind_b;
    o["task"] = to_string(c.task);
    o["metric"] = c.metric;
    if (c.test) {
      o["n"] = c.test->n;
      o["t"] = c.test->t;
      o["df"] = c.test->df;
      o["p"] = c.test->p;
    } else {
      o["note"] = c.note;
    }
    cmps.push_back(o);
  }
  return j.dump(2) + "\n";
}

}  // namespace segvar
