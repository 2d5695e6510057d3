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

#include "originality_guard/error.hpp"

namespace og {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kEmptyCorpus: return "empty-corpus";
    case ErrorCode::kPathNotFound: return "path-not-found";
    case ErrorCode::kMalformedRecord: return "malformed-record";
    case ErrorCode::kUnknownFormat: return "unknown-format";
    case ErrorCode::kCapability: return "capability";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kBadIndexFile: return "bad-index-file";
    case ErrorCode::kBackendUnavailable: return "backend-unavailable";
    case ErrorCode::kProtocolViolation: return "protocol-violation";
    case ErrorCode::kInvalidDistribution: return "invalid-distribution";
    case ErrorCode::kExperimentFailed: return "experiment-failed";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace og
