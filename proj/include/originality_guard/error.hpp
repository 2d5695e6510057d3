// Copyright 2026 The Originality Guard Authors.
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
#include <string_view>

namespace og {

/// Every failure the library reports carries one of these codes. The CLI
/// maps them onto process exit codes through `category()`.
enum class ErrorCode {
  kInvalidArgument,   // bad parameter value (lambda <= 0, Lmax < 2, ...)
  kInvalidConfig,     // malformed or inconsistent configuration
  kEmptyCorpus,
  kPathNotFound,
  kMalformedRecord,   // loader parse failure, carries a line number
  kUnknownFormat,
  kCapability,        // template requires prompt-capable backend
  kAlignment,         // distributions cannot be aligned
  kBadIndexFile,      // originality index magic/version mismatch
  kBackendUnavailable,
  kProtocolViolation,
  kInvalidDistribution,
  kExperimentFailed,
  kIo,
};

enum class ErrorCategory { kUsage, kData, kBackend };

constexpr ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
      return ErrorCategory::kUsage;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kInvalidDistribution:
    case ErrorCode::kIo:
      return ErrorCategory::kBackend;
    default:
      return ErrorCategory::kData;
  }
}

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace og
