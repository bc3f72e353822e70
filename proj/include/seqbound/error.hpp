// Copyright 2026 The seqbound Authors.
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

namespace seqbound {

enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kNegativeEntry,
  kZeroColumn,
  kNotNormalized,
  kEnumerationCapExceeded,
  kIndexOutOfRange,
  kLengthMismatch,
  kAlphabetMismatch,
  kRankDeficientInput,
  kFilterStarvation,
  kNotFound,
  kDivergenceDetected,
  kEmptyCorpus,
  kVocabTooLarge,
  kIo,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNegativeEntry: return "NegativeEntry";
    case ErrorKind::kZeroColumn: return "ZeroColumn";
    case ErrorKind::kNotNormalized: return "NotNormalized";
    case ErrorKind::kEnumerationCapExceeded: return "EnumerationCapExceeded";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kAlphabetMismatch: return "AlphabetMismatch";
    case ErrorKind::kRankDeficientInput: return "RankDeficientInput";
    case ErrorKind::kFilterStarvation: return "FilterStarvation";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kDivergenceDetected: return "DivergenceDetected";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kVocabTooLarge: return "VocabTooLarge";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SEQBOUND_CHECK(cond, kind, msg)                 \
  do {                                                  \
    if (!(cond)) throw ::seqbound::Error((kind), (msg)); \
  } while (0)

}  // namespace seqbound
