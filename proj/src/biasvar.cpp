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

#include "segvar/biasvar.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

namespace segvar {

PredictionEnsemble::PredictionEnsemble(std::string sample_id, std::vector<BinaryMask> predictions)
    : id_(std::move(sample_id)), preds_(std::move(predictions)) {
  require(preds_.size() >= 3, ErrorCode::EvenEnsemble,
          "ensemble needs at least 3 predictions, got " + std::to_string(preds_.size()));
  require(preds_.size() % 2 == 1, ErrorCode::EvenEnsemble,
          "ensemble size must be odd so the mode is unique, got " + std::to_string(preds_.size()));
  require(preds_.size() < 65535, ErrorCode::InvalidArgument, "ensemble too large");
  for (const auto& p : preds_)
    require(!p.empty() && p.same_shape(preds_.front()), ErrorCode::ShapeMismatch,
            "ensemble predictions must share one resolution");
}

std::vector<std::uint16_t> PredictionEnsemble::positive_votes() const {
  std::vector<std::uint16_t> votes(preds_.front().size(), 0);
  for (const auto& p : preds_)
    for (std::size_t i = 0; i < votes.size(); ++i) votes[i] = static_cast<std::uint16_t>(votes[i] + p[i]);
  return votes;
}

namespace {

ValueMap counts_to_map(int w, int h, const std::vector<std::uint16_t>& counts, int d) {
  ValueMap out(w, h);
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / d;
  return out;
}

}  // namespace

ValueMap DecompositionMaps::variance() const {
  return counts_to_map(main.width(), main.height(), variance_count, ensemble_size);
}

ValueMap DecompositionMaps::expected_loss() const {
  return counts_to_map(main.width(), main.height(), loss_count, ensemble_size);
}

ValueMap DecompositionMaps::signed_variance() const {
  ValueMap out = variance();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (bias[i]) out[i] = -out[i];
  return out;
}

BinaryMask main_prediction(const PredictionEnsemble& e) {
  const auto votes = e.positive_votes();
  BinaryMask out(e.width(), e.height());
  for (std::size_t i = 0; i < votes.size(); ++i) out[i] = 2 * votes[i] > e.size() ? 1 : 0;
  return out;
}

BinaryMask bias_map(const BinaryMask& truth, const BinaryMask& main) {
  require(truth.same_shape(main), ErrorCode::ShapeMismatch, "bias_map: shape mismatch");
  BinaryMask out(truth.width(), truth.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = truth[i] != main[i] ? 1 : 0;
  return out;
}

std::vector<std::uint16_t> variance_counts(const PredictionEnsemble& e, const BinaryMask& main) {
  require(main.same_shape(e.width(), e.height()), ErrorCode::ShapeMismatch, "variance_map: shape mismatch");
  const auto votes = e.positive_votes();
  std::vector<std::uint16_t> out(votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i)
    out[i] = static_cast<std::uint16_t>(main[i] ? e.size() - votes[i] : votes[i]);
  return out;
}

ValueMap variance_map(const PredictionEnsemble& e, const BinaryMask& main) {
  return counts_to_map(e.width(), e.height(), variance_counts(e, main), e.size());
}

namespace {
std::vector<std::uint16_t> loss_counts(const BinaryMask& truth, const PredictionEnsemble& e) {
  require(truth.same_shape(e.width(), e.height()), ErrorCode::ShapeMismatch,
          "expected_loss_map: truth and ensemble shapes differ");
  std::vector<std::uint16_t> out(truth.size(), 0);
  for (const auto& p : e.predictions())
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint16_t>(out[i] + (p[i] != truth[i]));
  return out;
}
}  // namespace

ValueMap expected_loss_map(const BinaryMask& truth, const PredictionEnsemble& e) {
  return counts_to_map(e.width(), e.height(), loss_counts(truth, e), e.size());
}

std::size_t identity_violations(const DecompositionMaps& d) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < d.loss_count.size(); ++i) {
    const int expected = d.bias[i] ? d.ensemble_size - d.variance_count[i] : d.variance_count[i];
    if (d.loss_count[i] != expected) ++bad;
  }
  return bad;
}

DecompositionMaps decompose(const BinaryMask& truth, const PredictionEnsemble& e) {
  require(truth.same_shape(e.width(), e.height()), ErrorCode::ShapeMismatch,
          "decompose: truth and ensemble shapes differ");
  DecompositionMaps d;
  d.ensemble_size = e.size();
  d.main = main_prediction(e);
  d.bias = bias_map(truth, d.main);
  d.variance_count = variance_counts(e, d.main);
  d.loss_count = loss_counts(truth, e);
  const auto bad = identity_violations(d);
  if (bad != 0)
    fail(ErrorCode::Internal, "decomposition identity violated at " + std::to_string(bad) + " pixels of sample '" +
                                  e.sample_id() + "'");
  return d;
}

double roi_expectation(const ValueMap& map, const BinaryMask& roi) {
  require(map.same_shape(roi), ErrorCode::ShapeMismatch, "roi_expectation: shape mismatch");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < roi.size(); ++i)
    if (roi[i]) {
      s += map[i];
      ++n;
    }
  require(n > 0, ErrorCode::EmptyInput, "roi_expectation over an empty ROI");
  return s / static_cast<double>(n);
}

double roi_expectation(const BinaryMask& map, const BinaryMask& roi) { return roi_expectation(to_values(map), roi); }

namespace {

// Integer sums over a pixel subset; exact until the final division.
struct RegionSums {
  std::uint64_t pixels = 0, bias = 0, variance = 0, loss = 0;
  std::int64_t signed_variance = 0;

  void add(const DecompositionMaps& d, std::size_t i) {
    ++pixels;
    bias += d.bias[i];
    variance += d.variance_count[i];
    loss += d.loss_count[i];
    signed_variance += d.bias[i] ? -static_cast<std::int64_t>(d.variance_count[i]) : d.variance_count[i];
  }

  std::optional<Expectations> expectations(int ensemble) const {
    if (pixels == 0) return std::nullopt;
    const double n = static_cast<double>(pixels);
    const double nd = n * ensemble;
    return Expectations{static_cast<double>(bias) / n, static_cast<double>(variance) / nd,
                        static_cast<double>(signed_variance) / nd, static_cast<double>(loss) / nd};
  }
};

}  // namespace

SampleDecomposition decompose_sample(const BinaryMask& truth, const PredictionEnsemble& e) {
  SampleDecomposition out;
  out.maps = decompose(truth, e);
  RegionSums pos, neg, all;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    (truth[i] ? pos : neg).add(out.maps, i);
    all.add(out.maps, i);
  }
  auto& s = out.expectations;
  s.id = e.sample_id();
  s.positive_pixels = pos.pixels;
  s.negative_pixels = neg.pixels;
  s.positive = pos.expectations(e.size());
  s.negative = neg.expectations(e.size());
  s.total = *all.expectations(e.size());
  return out;
}

namespace {

SummaryCell cell(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  return {mean(xs), sample_std(xs), xs.size()};
}

}  // namespace

ExpectationSummary summarize_table(const std::string& kind, std::span<const SampleExpectations> rows) {
  require(!rows.empty(), ErrorCode::EmptyInput, "summarize_table needs at least one sample");
  std::vector<double> pb, pv, pl, tb, tv, tl;
  ExpectationSummary s;
  s.kind = kind;
  for (const auto& r : rows) {
    if (r.positive) {
      pb.push_back(r.positive->bias);
      pv.push_back(r.positive->variance);
      pl.push_back(r.positive->loss);
    } else {
      ++s.excluded_positive;
    }
    tb.push_back(r.total.bias);
    tv.push_back(r.total.variance);
    tl.push_back(r.total.loss);
  }
  s.pos_bias = cell(pb);
  s.pos_variance = cell(pv);
  s.pos_loss = cell(pl);
  s.total_bias = cell(tb);
  s.total_variance = cell(tv);
  s.total_loss = cell(tl);
  return s;
}

const char* to_string(Region r) noexcept { return r == Region::Positive ? "positive" : "total"; }

const char* to_string(Quantity q) noexcept {
  switch (q) {
    case Quantity::Bias: return "bias";
    case Quantity::Variance: return "variance";
    case Quantity::Loss: return "loss";
  }
  return "unknown";
}

std::optional<double> expectation_value(const SampleExpectations& s, Region r, Quantity q) {
  const Expectations* e = r == Region::Positive ? (s.positive ? &*s.positive : nullptr) : &s.total;
  if (e == nullptr) return std::nullopt;
  switch (q) {
    case Quantity::Bias: return e->bias;
    case Quantity::Variance: return e->variance;
    case Quantity::Loss: return e->loss;
  }
  return std::nullopt;
}

std::vector<KindComparison> compare_kinds(
    std::span<const std::pair<std::string, std::vector<SampleExpectations>>> kinds) {
  std::vector<KindComparison> out;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    for (std::size_t j = i + 1; j < kinds.size(); ++j)
      for (Region r : {Region::Positive, Region::Total})
        for (Quantity q : {Quantity::Bias, Quantity::Variance, Quantity::Loss}) {
          KindComparison c{kinds[i].first, kinds[j].first, r, q, std::nullopt, ""};
          std::map<std::string, double> b_values;
          for (const auto& s : kinds[j].second)
            if (auto v = expectation_value(s, r, q)) b_values[s.id] = *v;
          std::vector<double> a, b;
          for (const auto& s : kinds[i].second) {
            const auto v = expectation_value(s, r, q);
            const auto it = b_values.find(s.id);
            if (v && it != b_values.end()) {
              a.push_back(*v);
              b.push_back(it->second);
            }
          }
          try {
            c.test = paired_t_test(a, b);
          } catch (const Error& e) {
            c.note = e.what();
          }
          out.push_back(c);
        }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::ordered_json exp_json(const std::optional<Expectations>& e) {
  if (!e) return nullptr;
  nlohmann::ordered_json j;
  j["bias"] = e->bias;
  j["variance"] = e->variance;
  j["signed_variance"] = e->signed_variance;
  j["loss"] = e->loss;
  return j;
}

nlohmann::ordered_json cell_json(const SummaryCell& c) {
  nlohmann::ordered_json j;
  j["n"] = c.n;
  j["mean"] = c.n ? nlohmann::ordered_json(c.mean) : nlohmann::ordered_json(nullptr);
  j["std"] = c.std ? nlohmann::ordered_json(*c.std) : nlohmann::ordered_json(nullptr);
  return j;
}

std::string cell_tsv(const SummaryCell& c) {
  if (c.n == 0) return "NA\tNA";
  return fmt(c.mean) + '\t' + (c.std ? fmt(*c.std) : std::string("NA"));
}

}  // namespace

std::string expectations_json(const std::string& kind, std::span<const SampleExpectations> rows,
                              const std::string& provenance) {
  nlohmann::ordered_json j;
  j["provenance"] = provenance;
  j["kind"] = kind;
  auto& arr = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["id"] = r.id;
    o["positive_pixels"] = r.positive_pixels;
    o["negative_pixels"] = r.negative_pixels;
    o["positive"] = exp_json(r.positive);
    o["negative"] = exp_json(r.negative);
    o["total"] = exp_json(r.total);
    arr.push_back(o);
  }
  return j.dump(2) + "\n";
}

std::string expectations_tsv(std::span<const SampleExpectations> rows, const std::string& provenance) {
  std::ostringstream os;
  os << "# " << provenance << '\n';
  os << "id\tpos_pixels\tpos_bias\tpos_var\tpos_loss\ttotal_bias\ttotal_var\ttotal_loss\n";
  for (const auto& r : rows) {
    os << r.id << '\t' << r.positive_pixels << '\t';
    if (r.positive)
      os << fmt(r.positive->bias) << '\t' << fmt(r.positive->variance) << '\t' << fmt(r.positive->loss);
    else
      os << "NA\tNA\tNA";
    os << '\t' << fmt(r.total.bias) << '\t' << fmt(r.total.variance) << '\t' << fmt(r.total.loss) << '\n';
  }
  return os.str();
}

std::string summary_tsv(std::span<const ExpectationSummary> summaries,
                        std::span<const KindComparison> comparisons, const std::string& provenance) {
  std::ostringstream os;
  os << "# " << provenance << "\n# mean and sample std (n-1) over test samples\n";
  os << "kind\tpos_n\tpos_bias_mean\tpos_bias_std\tpos_var_mean\tpos_var_std\tpos_loss_mean\tpos_loss_std\t"
        "total_n\ttotal_bias_mean\ttotal_bias_std\ttotal_var_mean\ttotal_var_std\ttotal_loss_mean\ttotal_loss_std\n";
  for (const auto& s : summaries)
    os << s.kind << '\t' << s.pos_bias.n << '\t' << cell_tsv(s.pos_bias) << '\t' << cell_tsv(s.pos_variance) << '\t'
       << cell_tsv(s.pos_loss) << '\t' << s.total_bias.n << '\t' << cell_tsv(s.total_bias) << '\t'
       << cell_tsv(s.total_variance) << '\t' << cell_tsv(s.total_loss) << '\n';
  os << "\n# paired t-tests between kinds\nkind_a\tkind_b\tregion\tquantity\tn\tt\tdf\tp\tnote\n";
  for (const auto& c : comparisons) {
    os << c.kind_a << '\t' << c.kind_b << '\t' << to_string(c.region) << '\t' << to_string(c.quantity) << '\t';
    if (c.test)
      os << c.test->n << '\t' << fmt(c.test->t) << '\t' << c.test->df << '\t' << fmt(c.test->p) << "\t\n";
    else
      os << "NA\tNA\tNA\tNA\t" << c.note << '\n';
  }
  return os.str();
}

std::string summary_json(std::span<const ExpectationSummary> summaries,
                         std::span<const KindComparison> comparisons, const std::string& provenance) {
  nlohmann::ordered_json j;
  j["provenance"] = provenance;
  j["std_over"] = "samples";
  auto& rows = j["kinds"] = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json o;
    o["kind"] = s.kind;
    o["excluded_positive"] = s.excluded_positive;
    o["positive"] = {{"bias", cell_json(s.pos_bias)},
                     {"variance", cell_json(s.pos_variance)},
                     {"loss", cell_json(s.pos_loss)}};
    o["total"] = {{"bias", cell_json(s.total_bias)},
                  {"variance", cell_json(s.total_variance)},
                  {"loss", cell_json(s.total_loss)}};
    rows.push_back(o);
  }
  auto& cmps = j["paired_t_tests"] = nlohmann::ordered_json::array();
  for (const auto& c : comparisons) {
    nlohmann::ordered_json o;
    o["kind_a"] = c.kind_a;
    o["kind_b"] = c.kind_b;
    o["region"] = to_string(c.region);
    o["quantity"] = to_string(c.quantity);
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
