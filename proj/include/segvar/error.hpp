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

#include <stdexcept>
#include <string>

namespace segvar {

/// Failure categories shared by the C++ core and the C API. The numeric
/// values are part of the C ABI (see segvar.h) and must not be reordered.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Io = 2,
  Format = 3,
  ShapeMismatch = 4,
  OutOfBounds = 5,
  DuplicateId = 6,
  MissingKey = 7,
  EmptyInput = 8,
  DegenerateWindow = 9,
  DegenerateVariance = 10,
  EvenEnsemble = 11,
  MissingArtifact = 12,
  Config = 13,
  Internal = 14,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace segvar
