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
#include <string>
#include <utility>
#include <vector>

#include "tokmem/config.hpp"
#include "tokmem/error.hpp"
#include "tokmem/token.hpp"

namespace tokmem {

/// A full short-term window handed over for consolidation, oldest first.
struct FlushSignal {
  std::vector<FrameTokens> frames;
};

/// Fixed-capacity FIFO of raw frames.
///
/// Batch policy: when a push would exceed the capacity K, the whole K-frame
/// buffer is returned as a FlushSignal and the new frame starts the next
/// window. Every flush therefore carries exactly K consecutive raw frames.
class ShortTermMemory {
 public:
  explicit ShortTermMemory(std::uint32_t capacity, FlushPolicy policy = FlushPolicy::kBatch)
      : capacity_(capacity) {
    if (capacity_ == 0) throw Error(ErrorKind::kInvalidConfig, "short-term capacity must be positive");
    if (policy != FlushPolicy::kBatch) {
      throw Error(ErrorKind::kInvalidConfig, "per-frame eviction is not supported");
    }
    frames_.reserve(capacity_);
  }

  explicit ShortTermMemory(const StreamConfig& cfg)
      : ShortTermMemory(cfg.short_capacity, cfg.flush_policy) {}

  std::optional<FlushSignal> push_frame(FrameTokens frame) {
    if (frame.weight() != 1) {
      throw Error(ErrorKind::kWeightNotOne, "only raw frames enter short-term memory");
    }
    const std::uint64_t index = frame.source_range().first;
    if (last_pushed_ && index != *last_pushed_ + 1) {
      throw Error(ErrorKind::kOutOfOrder, "frame " + std::to_string(index) +
                                              " does not follow frame " +
                                              std::to_string(*last_pushed_));
    }
    if (!frames_.empty()) require_same_shape(frames_.front(), frame);

    std::optional<FlushSignal> flush;
    if (frames_.size() == capacity_) {
      flush = FlushSignal{std::move(frames_)};
      frames_ = {};
      frames_.reserve(capacity_);
    }
    frames_.push_back(std::move(frame));
    last_pushed_ = index;
    return flush;
  }

  /// Copy of the buffered frames, oldest first.
  std::vector<FrameTokens> contents() const { return frames_; }

  /// Read-only view; valid until the next push.
  const std::vector<FrameTokens>& frames() const { return frames_; }

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  std::uint32_t capacity() const { return capacity_; }
  const std::optional<std::uint64_t>& last_pushed() const { return last_pushed_; }

 private:
  std::uint32_t capacity_;
  std::vector<FrameTokens> frames_;
  std::optional<std::uint64_t> last_pushed_;
};

}  // namespace tokmem
