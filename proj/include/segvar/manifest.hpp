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

#include <filesystem>
#include <string>
#include <vector>

#include "segvar/image.hpp"

namespace segvar {

struct SampleRecord {
  std::string id;
  std::string patient;
  std::string image;
  std::string rectum_mask;
  std::string tumor_mask;
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Ordered set of samples. Relative file paths resolve against base_dir,
/// which load_manifest sets to the manifest's own directory.
class Manifest {
 public:
  Manifest() = default;
  Manifest(std::vector<SampleRecord> records, std::filesystem::path base_dir = {});

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::size_t size() const noexcept { return records_.size(); }

  const SampleRecord& find(const std::string& id) const;
  std::vector<std::string> ids() const;

  std::filesystem::path resolve(const std::string& file) const;

  /// Missing referenced files surface here, at first load.
  GrayImage load_image(const SampleRecord& rec) const;
  BinaryMask load_rectum(const SampleRecord& rec) const;
  BinaryMask load_tumor(const SampleRecord& rec) const;

 private:
  std::vector<SampleRecord> records_;
  std::filesystem::path base_dir_;
};

/// JSON-lines, one object per line with keys id, patient, image, rectum_mask,
/// tumor_mask. Blank lines are ignored.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

}  // namespace segvar
