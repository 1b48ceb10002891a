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

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tokmem/binary_io.hpp"
#include "tokmem/config.hpp"
#include "tokmem/error.hpp"
#include "tokmem/token.hpp"

namespace tokmem {

/// One greedy step: the pair (index, index + 1) was merged.
struct MergeStep {
  std::size_t index;
  double similarity;
};

struct ConsolidationTrace {
  std::vector<MergeStep> merges;
};

/// Greedy consolidation of a contiguous run of frames.
///
/// Repeatedly merges the adjacent pair with the highest frame similarity
/// until the run holds `target_tokens` tokens. Ties go to the lowest pair
/// index. Only the two similarities that touch a merged pair are recomputed
/// per step; the result is identical to recomputing every pair each time.
inline std::vector<FrameTokens> consolidate(std::vector<FrameTokens> batch,
                                            std::uint64_t target_tokens,
                                            ConsolidationTrace* trace = nullptr) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "nothing to consolidate");
  const std::uint32_t n = batch.front().tokens_per_frame();
  for (std::size_t i = 1; i < batch.size(); ++i) {
    require_same_shape(batch[i - 1], batch[i]);
    if (batch[i - 1].source_range().last + 1 != batch[i].source_range().first) {
      throw Error(ErrorKind::kNonAdjacent, "consolidation batch is not contiguous at frame " +
                                               std::to_string(i));
    }
  }
  if (target_tokens == 0 || target_tokens % n != 0) {
    throw Error(ErrorKind::kTargetNotMultiple, "target " + std::to_string(target_tokens) +
                                                   " is not a positive multiple of " +
                                                   std::to_string(n));
  }
  const std::uint64_t target_frames = target_tokens / n;
  if (target_frames > batch.size()) {
    throw Error(ErrorKind::kTargetTooLarge, "target " + std::to_string(target_tokens) +
                                                " exceeds the batch's " +
                                                std::to_string(batch.size() * n) + " tokens");
  }

  // sims[i] is the similarity of (batch[i], batch[i + 1]).
  std::vector<double> sims;
  sims.reserve(batch.size());
  for (std::size_t i = 0; i + 1 < batch.size(); ++i) {
    sims.push_back(frame_similarity(batch[i], batch[i + 1]));
  }

  while (batch.size() > target_frames) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < sims.size(); ++i) {
      if (sims[i] > sims[best]) best = i;
    }
    if (trace) trace->merges.push_back({best, sims[best]});

    batch[best] = merge_frames(batch[best], batch[best + 1]);
    batch.erase(batch.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    sims.erase(sims.begin() + static_cast<std::ptrdiff_t>(best));
    if (best > 0) sims[best - 1] = frame_similarity(batch[best - 1], batch[best]);
    if (best < sims.size()) sims[best] = frame_similarity(batch[best], batch[best + 1]);
  }
  return batch;
}

/// Append-only store of consolidated frames. Each stored token receives the
/// next positional index; indices run 0, 1, 2, ... and must stay below n^2.
class LongTermMemory {
 public:
  LongTermMemory(std::uint32_t tokens_per_frame, std::uint32_t feature_dim,
                 std::uint64_t max_positions)
      : n_(tokens_per_frame), d_(feature_dim), max_positions_(max_positions) {
    if (n_ == 0 || d_ == 0) throw Error(ErrorKind::kInvalidConfig, "frame shape must be non-empty");
  }

  explicit LongTermMemory(const StreamConfig& cfg)
      : LongTermMemory(cfg.tokens_per_frame, cfg.feature_dim, cfg.max_positions()) {}

  void append_consolidated(const std::vector<FrameTokens>& frames) {
    if (frames.empty()) return;
    std::optional<std::uint64_t> expected;
    if (!frames_.empty()) expected = frames_.back().source_range().last + 1;
    for (const auto& f : frames) {
      if (f.tokens_per_frame() != n_ || f.feature_dim() != d_) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "consolidated frame is " + std::to_string(f.tokens_per_frame()) + "x" +
                        std::to_string(f.feature_dim()) + ", expected " + std::to_string(n_) +
                        "x" + std::to_string(d_));
      }
      if (expected && f.source_range().first != *expected) {
        throw Error(ErrorKind::kCoverageGap, "expected frame " + std::to_string(*expected) +
                                                 ", got " +
                                                 std::to_string(f.source_range().first));
      }
      expected = f.source_range().last + 1;
    }
    const std::uint64_t new_total = total_tokens() + std::uint64_t{n_} * frames.size();
    if (new_total > max_positions_) {
      throw Error(ErrorKind::kPositionalOverflow,
                  std::to_string(new_total) + " tokens exceed the " +
                      std::to_string(max_positions_) + " addressable positions");
    }
    for (const auto& f : frames) {
      for (std::uint32_t j = 0; j < n_; ++j) {
        positional_indices_.push_back(static_cast<std::uint32_t>(positional_indices_.size()));
      }
      covered_weight_ += f.weight();
      frames_.push_back(f);
    }
  }

  const std::vector<FrameTokens>& frames() const { return frames_; }
  const std::vector<std::uint32_t>& positional_indices() const { return positional_indices_; }
  std::uint64_t total_tokens() const { return positional_indices_.size(); }
  std::uint64_t covered_frames() const { return covered_weight_; }
  std::uint32_t tokens_per_frame() const { return n_; }
  std::uint32_t feature_dim() const { return d_; }
  std::uint64_t max_positions() const { return max_positions_; }
  bool empty() const { return frames_.empty(); }

  std::size_t byte_size() const {
    std::size_t bytes = 0;
    for (const auto& f : frames_) bytes += f.byte_size();
    return bytes;
  }

 private:
  std::uint32_t n_;
  std::uint32_t d_;
  std::uint64_t max_positions_;
  std::vector<FrameTokens> frames_;
  std::vector<std::uint32_t> positional_indices_;
  std::uint64_t covered_weight_ = 0;
};

/// Extends an absolute positional table of length n to n^2 positions by
/// two-level decomposition:
///   encode(p) = table[p]                                  for p < n
///   encode(p) = a * table[p / n] + (1 - a) * table[p % n]  otherwise
class PositionalEncoder {
 public:
  PositionalEncoder(std::uint32_t n, std::uint32_t dim, std::vector<float> table, double alpha)
      : n_(n), dim_(dim), table_(std::move(table)), alpha_(alpha) {
    if (n_ == 0 || dim_ == 0) throw Error(ErrorKind::kInvalidConfig, "empty positional table");
    if (table_.size() != std::size_t{n_} * dim_) {
      throw Error(ErrorKind::kDimensionMismatch, "positional table size does not match n x dim");
    }
    if (!(alpha_ > 0.0 && alpha_ < 1.0) || alpha_ == 0.5) {
      throw Error(ErrorKind::kInvalidConfig, "alpha must lie in (0, 1) and differ from 0.5");
    }
  }

  /// Stand-in for a learned table: the usual sin/cos pattern.
  static PositionalEncoder sinusoidal(std::uint32_t n, std::uint32_t dim, double alpha) {
    std::vector<float> table(std::size_t{n} * dim);
    for (std::uint32_t p = 0; p < n; ++p) {
      for (std::uint32_t i = 0; i < dim; i += 2) {
        const double freq = std::pow(10000.0, static_cast<double>(i) / dim);
        table[std::size_t{p} * dim + i] = static_cast<float>(std::sin(p / freq));
        if (i + 1 < dim) table[std::size_t{p} * dim + i + 1] = static_cast<float>(std::cos(p / freq));
      }
    }
    return PositionalEncoder(n, dim, std::move(table), alpha);
  }

  static PositionalEncoder from_config(const StreamConfig& cfg) {
    return sinusoidal(cfg.base_pe_length, cfg.feature_dim, cfg.pe_alpha);
  }

  /// Loads a PETB table: "PETB", u32 n, u32 dim, n*dim float32 row-major.
  static PositionalEncoder load(const std::string& path, double alpha) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIoFailure, "cannot open positional table " + path);
    io::expect_magic(in, "PETB");
    const std::uint32_t n = io::get_u32(in, "PETB n");
    const std::uint32_t dim = io::get_u32(in, "PETB dim");
    std::vector<float> table(std::size_t{n} * dim);
    io::get_floats(in, table, "PETB table");
    io::expect_eof(in, "PETB table");
    return PositionalEncoder(n, dim, std::move(table), alpha);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIoFailure, "cannot write positional table " + path);
    io::put_magic(out, "PETB");
    io::put_u32(out, n_);
    io::put_u32(out, dim_);
    io::put_floats(out, table_);
    if (!out.flush()) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
  }

  std::vector<double> encode(std::int64_t position) const {
    const auto n = static_cast<std::int64_t>(n_);
    if (position < 0 || position >= n * n) {
      throw Error(ErrorKind::kIndexOutOfRange, "position " + std::to_string(position) +
                                                   " outside [0, " + std::to_string(n * n) + ")");
    }
    std::vector<double> out(dim_);
    if (position < n) {
      const auto row = base_row(static_cast<std::uint32_t>(position));
      for (std::uint32_t k = 0; k < dim_; ++k) out[k] = row[k];
      return out;
    }
    const auto hi = base_row(static_cast<std::uint32_t>(position / n));
    const auto lo = base_row(static_cast<std::uint32_t>(position % n));
    for (std::uint32_t k = 0; k < dim_; ++k) {
      out[k] = alpha_ * hi[k] + (1.0 - alpha_) * lo[k];
    }
    return out;
  }

  std::span<const float> base_row(std::uint32_t row) const {
    return std::span<const float>(table_).subspan(std::size_t{row} * dim_, dim_);
  }

  std::uint32_t base_length() const { return n_; }
  std::uint32_t dim() const { return dim_; }
  double alpha() const { return alpha_; }
  std::uint64_t capacity() const { return std::uint64_t{n_} * n_; }

 private:
  std::uint32_t n_;
  std::uint32_t dim_;
  std::vector<float> table_;
  double alpha_;
};

}  // namespace tokmem
