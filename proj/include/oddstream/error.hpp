/*
 * Copyright 2026 The oddstream Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oddstream {

enum class ErrorCode {
  kZeroVector,
  kNonFinite,
  kDimensionMismatch,
  kEmptyInput,
  kEmptyBank,
  kInvalidScale,
  kEmptyNeighbors,
  kMissingLabel,
  kEmptyScores,
  kInvalidTarget,
  kInvalidConfig,
  kEmptyDataset,
  kNonPositiveStd,
  kInvalidCount,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedPayload,
  kIoFailure,
  kParseError,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kInvalidScale: return "InvalidScale";
    case ErrorCode::kEmptyNeighbors: return "EmptyNeighbors";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kInvalidTarget: return "InvalidTarget";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNonPositiveStd: return "NonPositiveStd";
    case ErrorCode::kInvalidCount: return "InvalidCount";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oddstream
