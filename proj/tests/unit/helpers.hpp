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
#include <fstream>
#include <unistd.h>
#include <string>

#include "segvar/image.hpp"
#include "segvar/random.hpp"

namespace testing {

/// Fresh scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("segvar_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline segvar::BinaryMask random_mask(int w, int h, segvar::Rng& rng, double p = 0.5) {
  segvar::BinaryMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.bernoulli(p) ? 1 : 0;
  return m;
}

inline segvar::GrayImage random_image(int w, int h, int depth, segvar::Rng& rng) {
  segvar::GrayImage img(w, h, depth);
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(img.max_value()) + 1));
  return img;
}

}  // namespace testing
