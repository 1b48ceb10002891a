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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tokmem/error.hpp"

namespace tokmem {

/// One D-dimensional feature vector. Storage is float32; kernels accumulate
/// in double.
using Token = std::span<const float>;

/// Inclusive range of raw frame indices in the original stream.
struct SourceRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;

  std::uint64_t length() const { return last - first + 1; }
  friend bool operator==(const SourceRange&, const SourceRange&) = default;
};

/// The N tokens that represent one frame, or a run of adjacent frames that
/// have been merged. The merge weight is the number of raw frames covered
/// and is derived from the source range, so the two can never disagree.
class FrameTokens {
 public:
  FrameTokens() = default;

  /// Takes ownership of `values`, laid out row-major [token][dim].
  FrameTokens(std::uint32_t tokens_per_frame, std::uint32_t feature_dim,
              std::vector<float> values, SourceRange range)
      : n_(tokens_per_frame), d_(feature_dim), values_(std::move(values)), range_(range) {
    if (n_ == 0 || d_ == 0) {
      throw Error(ErrorKind::kDimensionMismatch, "frames need at least one token of dimension >= 1");
    }
    if (values_.size() != std::size_t{n_} * d_) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "expected " + std::to_string(std::size_t{n_} * d_) + " values, got " +
                      std::to_string(values_.size()));
    }
    if (range_.last < range_.first) {
      throw Error(ErrorKind::kNonAdjacent, "source range is reversed");
    }
    for (float v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kNonFinite, "token values must be finite");
    }
  }

  /// A raw (weight 1) frame at stream position `index`.
  static FrameTokens raw(std::uint32_t tokens_per_frame, std::uint32_t feature_dim,
                         std::vector<float> values, std::uint64_t index) {
    return FrameTokens(tokens_per_frame, feature_dim, std::move(values), {index, index});
  }

  std::uint32_t tokens_per_frame() const { return n_; }
  std::uint32_t feature_dim() const { return d_; }
  std::uint64_t weight() const { return range_.length(); }
  const SourceRange& source_range() const { return range_; }

  Token token(std::size_t j) const {
    return Token(values_).subspan(j * d_, d_);
  }
  std::span<const float> values() const { return values_; }

  std::size_t byte_size() const { return values_.size() * sizeof(float); }

  friend bool operator==(const FrameTokens&, const FrameTokens&) = default;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t d_ = 0;
  std::vector<float> values_;
  SourceRange range_;
};

inline constexpr double kZeroNormEpsilon = 1e-12;

/// Cosine similarity of two tokens, clamped to [-1, 1].
inline double token_cosine(Token a, Token b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "token dimensions differ");
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    dot += x * y;
    aa += x * x;
    bb += y * y;
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < kZeroNormEpsilon || nb < kZeroNormEpsilon) {
    throw Error(ErrorKind::kZeroVector, "cosine of a zero-norm token is undefined");
  }
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

inline void require_same_shape(const FrameTokens& a, const FrameTokens& b) {
  if (a.tokens_per_frame() != b.tokens_per_frame() || a.feature_dim() != b.feature_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "frame shapes differ: " + std::to_string(a.tokens_per_frame()) + "x" +
                    std::to_string(a.feature_dim()) + " vs " +
                    std::to_string(b.tokens_per_frame()) + "x" + std::to_string(b.feature_dim()));
  }
}

/// Mean over aligned token positions of the per-position cosine.
/// Symmetric bit-for-bit in (a, b).
inline double frame_similarity(const FrameTokens& a, const FrameTokens& b) {
  require_same_shape(a, b);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.tokens_per_frame(); ++j) {
    sum += token_cosine(a.token(j), b.token(j));
  }
  return sum / a.tokens_per_frame();
}

/// Weighted mean of two temporally adjacent frames. Because weights track
/// raw-frame counts, any merge tree over a contiguous run yields the plain
/// mean of the raw frames (up to float32 rounding of the stored result).
inline FrameTokens merge_frames(const FrameTokens& a, const FrameTokens& b) {
  require_same_shape(a, b);
  if (a.source_range().last + 1 != b.source_range().first) {
    throw Error(ErrorKind::kNonAdjacent,
                "cannot merge [" + std::to_string(a.source_range().first) + "," +
                    std::to_string(a.source_range().last) + "] with [" +
                    std::to_string(b.source_range().first) + "," +
                    std::to_string(b.source_range().last) + "]");
  }
  const double wa = static_cast<double>(a.weight());
  const double wb = static_cast<double>(b.weight());
  const double total = wa + wb;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<float> out(av.size());
  for (std::size_t k = 0; k < av.size(); ++k) {
    out[k] = static_cast<float>((wa * av[k] + wb * bv[k]) / total);
  }
  return FrameTokens(a.tokens_per_frame(), a.feature_dim(), std::move(out),
                     {a.source_range().first, b.source_range().last});
}

}  // namespace tokmem
