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

#include "segvar/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace segvar {

namespace {

constexpr const char* kKeys[] = {"id", "patient", "image", "rectum_mask", "tumor_mask"};

void check_unique(const std::vector<SampleRecord>& records) {
  std::set<std::string> seen;
  for (const auto& r : records)
    if (!seen.insert(r.id).second) fail(ErrorCode::DuplicateId, "duplicate sample id '" + r.id + "'");
}

}  // namespace

Manifest::Manifest(std::vector<SampleRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  require(!records_.empty(), ErrorCode::EmptyInput, "manifest is empty");
  check_unique(records_);
}

const SampleRecord& Manifest::find(const std::string& id) const {
  for (const auto& r : records_)
    if (r.id == id) return r;
  fail(ErrorCode::InvalidArgument, "unknown sample id '" + id + "'");
}

std::vector<std::string> Manifest::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.id);
  return out;
}

std::filesystem::path Manifest::resolve(const std::string& file) const {
  std::filesystem::path p(file);
  return p.is_absolute() ? p : base_dir_ / p;
}

namespace {
std::filesystem::path existing(const Manifest& m, const std::string& file, const std::string& id) {
  auto p = m.resolve(file);
  if (!std::filesystem::exists(p))
    fail(ErrorCode::MissingArtifact, "sample '" + id + "' references missing file " + p.string());
  return p;
}
}  // namespace

GrayImage Manifest::load_image(const SampleRecord& rec) const {
  return load_gray(existing(*this, rec.image, rec.id));
}

BinaryMask Manifest::load_rectum(const SampleRecord& rec) const {
  return load_mask(existing(*this, rec.rectum_mask, rec.id));
}

BinaryMask Manifest::load_tumor(const SampleRecord& rec) const {
  return load_mask(existing(*this, rec.tumor_mask, rec.id));
}

Manifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingArtifact, "missing artifact " + path.string());
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open manifest " + path.string());
  std::vector<SampleRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": not an object");
    for (const char* k : kKeys)
      if (!j.contains(k) || !j[k].is_string())
        fail(ErrorCode::MissingKey,
             path.string() + ":" + std::to_string(lineno) + ": missing key '" + k + "'");
    records.push_back({j["id"], j["patient"], j["image"], j["rectum_mask"], j["tumor_mask"]});
  }
  if (records.empty()) fail(ErrorCode::EmptyInput, "manifest is empty: " + path.string());
  return Manifest(std::move(records), path.parent_path());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write manifest " + path.string());
  for (const auto& r : m.records()) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["patient"] = r.patient;
    j["image"] = r.image;
    j["rectum_mask"] = r.rectum_mask;
    j["tumor_mask"] = r.tumor_mask;
    out << j.dump() << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace segvar
