// Copyright (c) 2026, The tokmem Authors. All rights reserved.
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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tokmem {

enum class ErrorKind {
  kInvalidConfig,
  kNonFinite,
  kZeroVector,
  kDimensionMismatch,
  kNonAdjacent,
  kEmptyBatch,
  kOutOfOrder,
  kWeightNotOne,
  kTargetTooLarge,
  kTargetNotMultiple,
  kPositionalOverflow,
  kCoverageGap,
  kIndexOutOfRange,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedPayload,
  kTrailingData,
  kStaleCurrent,
  kIoFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kNonAdjacent: return "NonAdjacent";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kOutOfOrder: return "OutOfOrder";
    case ErrorKind::kWeightNotOne: return "WeightNotOne";
    case ErrorKind::kTargetTooLarge: return "TargetTooLarge";
    case ErrorKind::kTargetNotMultiple: return "TargetNotMultiple";
    case ErrorKind::kPositionalOverflow: return "PositionalOverflow";
    case ErrorKind::kCoverageGap: return "CoverageGap";
    case ErrorKind::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::kBadMagic: return "BadMagic";
    case ErrorKind::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::kTruncatedPayload: return "TruncatedPayload";
    case ErrorKind::kTrailingData: return "TrailingData";
    case ErrorKind::kStaleCurrent: return "StaleCurrent";
    case ErrorKind::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// All library failures are reported as tokmem::Error. The kind is stable
/// and machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Zero-based index of the stream frame being processed when the error
  /// surfaced, if known.
  const std::optional<std::uint64_t>& stream_position() const noexcept {
    return stream_position_;
  }
  Error& at_position(std::uint64_t position) {
    stream_position_ = position;
    return *this;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
  std::optional<std::uint64_t> stream_position_;
};

}  // namespace tokmem
