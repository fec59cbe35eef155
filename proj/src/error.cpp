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

#include "segvar/error.hpp"

namespace segvar {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::OutOfBounds: return "out_of_bounds";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::MissingKey: return "missing_key";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::DegenerateWindow: return "degenerate_window";
    case ErrorCode::DegenerateVariance: return "degenerate_variance";
    case ErrorCode::EvenEnsemble: return "even_ensemble";
    case ErrorCode::MissingArtifact: return "missing_artifact";
    case ErrorCode::Config: return "config";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace segvar
