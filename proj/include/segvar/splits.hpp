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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "segvar/manifest.hpp"

namespace segvar {

using IdList = std::vector<std::string>;

struct HoldoutSplit {
  IdList test_ids;
  IdList pool_ids;
};

/// Test set plus the overlapping training sets for ensemble analysis. Training
/// set k is the pool minus fold k; the excluded folds are not kept.
struct SplitPlan {
  IdList test_ids;
  std::vector<IdList> training_sets;
  std::uint64_t seed = 0;
  bool group_by_patient = true;
  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

struct KfoldPlan {
  std::vector<IdList> folds;
  std::uint64_t seed = 0;
  bool group_by_patient = true;
  friend bool operator==(const KfoldPlan&, const KfoldPlan&) = default;
};

/// Seeded shuffle of units (patients when grouping, else records); the first
/// ceil(test_frac * units) units form the test set. Both outputs keep
/// manifest order.
HoldoutSplit holdout_split(const Manifest& m, double test_frac, std::uint64_t seed,
                           bool group_by_patient);

/// Shuffles the pool's units once and cuts them into n_sets contiguous folds
/// whose unit counts differ by at most one. When `m` is given and grouping is
/// on, a patient's records always share a fold.
std::vector<IdList> make_training_sets(const IdList& pool_ids, int n_sets, std::uint64_t seed,
                                       const Manifest* m = nullptr, bool group_by_patient = false);

KfoldPlan kfold(const IdList& ids, int k, std::uint64_t seed, const Manifest* m = nullptr,
                bool group_by_patient = false);

/// Full plan: holdout followed by training sets over the pool.
SplitPlan make_split_plan(const Manifest& m, double test_frac, int n_sets, std::uint64_t seed,
                          bool group_by_patient);

/// Ids of the union of all folds except `fold`.
IdList training_ids_for_fold(const KfoldPlan& plan, std::size_t fold);

std::string to_json(const SplitPlan& p);
std::string to_json(const KfoldPlan& p);
SplitPlan split_plan_from_json(const std::string& text);
KfoldPlan kfold_plan_from_json(const std::string& text);

void save_split_plan(const SplitPlan& p, const std::filesystem::path& path);
SplitPlan load_split_plan(const std::filesystem::path& path);
void save_kfold_plan(const KfoldPlan& p, const std::filesystem::path& path);
KfoldPlan load_kfold_plan(const std::filesystem::path& path);

}  // namespace segvar
