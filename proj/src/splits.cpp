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

#include "segvar/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "fileio.hpp"
#include "segvar/random.hpp"

namespace segvar {

namespace {

using Unit = IdList;

// Groups ids into units. With grouping, ids of one patient form one unit in
// order of first appearance; otherwise every id is its own unit.
std::vector<Unit> make_units(const IdList& ids, const Manifest* m, bool group) {
  std::vector<Unit> units;
  if (!group || m == nullptr) {
    for (const auto& id : ids) units.push_back({id});
    return units;
  }
  std::map<std::string, std::size_t> index;
  for (const auto& id : ids) {
    const auto& patient = m->find(id).patient;
    auto [it, fresh] = index.try_emplace(patient, units.size());
    if (fresh) units.emplace_back();
    units[it->second].push_back(id);
  }
  return units;
}

std::vector<IdList> partition(std::vector<Unit> units, int k, Rng& rng) {
  rng.shuffle(std::span<Unit>(units));
  std::vector<IdList> folds(static_cast<std::size_t>(k));
  const std::size_t n = units.size();
  const std::size_t base = n / k, extra = n % k;
  std::size_t u = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t take = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < take; ++i, ++u)
      folds[f].insert(folds[f].end(), units[u].begin(), units[u].end());
  }
  return folds;
}

IdList in_order(const IdList& reference, const std::set<std::string>& keep) {
  IdList out;
  for (const auto& id : reference)
    if (keep.contains(id)) out.push_back(id);
  return out;
}

void check_distinct(const IdList& ids) {
  std::set<std::string> s(ids.begin(), ids.end());
  require(s.size() == ids.size(), ErrorCode::DuplicateId, "id list contains duplicates");
}

}  // namespace

HoldoutSplit holdout_split(const Manifest& m, double test_frac, std::uint64_t seed,
                           bool group_by_patient) {
  require(m.size() > 0, ErrorCode::EmptyInput, "holdout_split on an empty manifest");
  require(test_frac > 0.0 && test_frac < 1.0, ErrorCode::InvalidArgument, "test_frac must be in (0,1)");
  const IdList ids = m.ids();
  auto units = make_units(ids, &m, group_by_patient);
  Rng rng(derive_seed(seed, 0x401d));
  rng.shuffle(std::span<Unit>(units));
  const auto n_test = static_cast<std::size_t>(std::ceil(test_frac * static_cast<double>(units.size()) - 1e-9));
  require(n_test < units.size(), ErrorCode::InvalidArgument, "test set would empty the training pool");
  std::set<std::string> test;
  for (std::size_t u = 0; u < n_test; ++u) test.insert(units[u].begin(), units[u].end());
  HoldoutSplit out;
  for (const auto& id : ids) (test.contains(id) ? out.test_ids : out.pool_ids).push_back(id);
  return out;
}

std::vector<IdList> make_training_sets(const IdList& pool_ids, int n_sets, std::uint64_t seed,
                                       const Manifest* m, bool group_by_patient) {
  require(n_sets >= 2, ErrorCode::InvalidArgument, "need at least two training sets");
  check_distinct(pool_ids);
  auto units = make_units(pool_ids, m, group_by_patient);
  require(units.size() >= static_cast<std::size_t>(n_sets), ErrorCode::InvalidArgument,
          "pool too small for the requested number of training sets");
  Rng rng(derive_seed(seed, 0x7a15));
  const auto folds = partition(std::move(units), n_sets, rng);
  std::vector<IdList> sets;
  for (const auto& fold : folds) {
    std::set<std::string> excluded(fold.begin(), fold.end());
    IdList s;
    for (const auto& id : pool_ids)
      if (!excluded.contains(id)) s.push_back(id);
    sets.push_back(std::move(s));
  }
  return sets;
}

KfoldPlan kfold(const IdList& ids, int k, std::uint64_t seed, const Manifest* m, bool group_by_patient) {
  require(k >= 2, ErrorCode::InvalidArgument, "k-fold needs k >= 2");
  check_distinct(ids);
  auto units = make_units(ids, m, group_by_patient);
  require(units.size() >= static_cast<std::size_t>(k), ErrorCode::InvalidArgument,
          "too few units for the requested number of folds");
  Rng rng(derive_seed(seed, 0xcf01));
  KfoldPlan plan;
  plan.seed = seed;
  plan.group_by_patient = group_by_patient && m != nullptr;
  for (auto& fold : partition(std::move(units), k, rng)) {
    std::set<std::string> keep(fold.begin(), fold.end());
    plan.folds.push_back(in_order(ids, keep));
  }
  return plan;
}

SplitPlan make_split_plan(const Manifest& m, double test_frac, int n_sets, std::uint64_t seed,
                          bool group_by_patient) {
  const auto hold = holdout_split(m, test_frac, seed, group_by_patient);
  SplitPlan plan;
  plan.test_ids = hold.test_ids;
  plan.training_sets = make_training_sets(hold.pool_ids, n_sets, seed, &m, group_by_patient);
  plan.seed = seed;
  plan.group_by_patient = group_by_patient;
  return plan;
}

IdList training_ids_for_fold(const KfoldPlan& plan, std::size_t fold) {
  require(fold < plan.folds.size(), ErrorCode::InvalidArgument, "fold index out of range");
  IdList out;
  for (std::size_t f = 0; f < plan.folds.size(); ++f)
    if (f != fold) out.insert(out.end(), plan.folds[f].begin(), plan.folds[f].end());
  return out;
}

std::string to_json(const SplitPlan& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["group_by_patient"] = p.group_by_patient;
  j["test_ids"] = p.test_ids;
  j["training_sets"] = p.training_sets;
  return j.dump(2) + "\n";
}

std::string to_json(const KfoldPlan& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["group_by_patient"] = p.group_by_patient;
  j["folds"] = p.folds;
  return j.dump(2) + "\n";
}

namespace {
nlohmann::json parse_or_fail(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed ") + what + ": " + e.what());
  }
}
}  // namespace

SplitPlan split_plan_from_json(const std::string& text) {
  const auto j = parse_or_fail(text, "split plan");
  try {
    SplitPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.group_by_patient = j.at("group_by_patient").get<bool>();
    p.test_ids = j.at("test_ids").get<IdList>();
    p.training_sets = j.at("training_sets").get<std::vector<IdList>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MissingKey, std::string("split plan: ") + e.what());
  }
}

KfoldPlan kfold_plan_from_json(const std::string& text) {
  const auto j = parse_or_fail(text, "k-fold plan");
  try {
    KfoldPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.group_by_patient = j.at("group_by_patient").get<bool>();
    p.folds = j.at("folds").get<std::vector<IdList>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MissingKey, std::string("k-fold plan: ") + e.what());
  }
}

using detail::read_text;
using detail::write_text;

void save_split_plan(const SplitPlan& p, const std::filesystem::path& path) { write_text(path, to_json(p)); }
SplitPlan load_split_plan(const std::filesystem::path& path) { return split_plan_from_json(read_text(path)); }
void save_kfold_plan(const KfoldPlan& p, const std::filesystem::path& path) { write_text(path, to_json(p)); }
KfoldPlan load_kfold_plan(const std::filesystem::path& path) { return kfold_plan_from_json(read_text(path)); }

}  // namespace segvar
