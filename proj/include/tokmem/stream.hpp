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
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tokmem/binary_io.hpp"
#include "tokmem/config.hpp"
#include "tokmem/error.hpp"
#include "tokmem/long_memory.hpp"
#include "tokmem/short_memory.hpp"
#include "tokmem/token.hpp"

namespace tokmem {

/// Anything that yields raw frames one at a time, in stream order.
template <typename S>
concept FrameSource = requires(S& s) {
  { s.next() } -> std::same_as<std::optional<FrameTokens>>;
};

// ---------------------------------------------------------------------------
// MCTS token-stream files
//
//   offset 0   "MCTS"
//          4   u32 version (1)
//          8   u32 frame count T
//         12   u32 tokens per frame N
//         16   u32 feature dim D
//         20   T*N*D float32, row-major [frame][token][dim]
//
// All integers and floats little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 20;

struct TokenStreamHeader {
  std::uint32_t version = kStreamVersion;
  std::uint32_t frame_count = 0;
  std::uint32_t tokens_per_frame = 0;
  std::uint32_t feature_dim = 0;

  std::uint64_t payload_bytes() const {
    return std::uint64_t{frame_count} * tokens_per_frame * feature_dim * sizeof(float);
  }
};

/// Streams frames out of an MCTS file; holds one frame in memory at a time.
class TokenStreamReader {
 public:
  explicit TokenStreamReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorKind::kIoFailure, "cannot open token stream " + path);
    io::expect_magic(in_, "MCTS");
    header_.version = io::get_u32(in_, "MCTS version");
    if (header_.version != kStreamVersion) {
      throw Error(ErrorKind::kUnsupportedVersion,
                  "MCTS version " + std::to_string(header_.version) + " is not supported");
    }
    header_.frame_count = io::get_u32(in_, "MCTS frame count");
    header_.tokens_per_frame = io::get_u32(in_, "MCTS tokens per frame");
    header_.feature_dim = io::get_u32(in_, "MCTS feature dim");
    if (header_.tokens_per_frame == 0 || header_.feature_dim == 0) {
      throw Error(ErrorKind::kDimensionMismatch, "MCTS header declares an empty frame shape");
    }
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (!ec) {
      const auto expected = kStreamHeaderBytes + header_.payload_bytes();
      if (size < expected) {
        throw Error(ErrorKind::kTruncatedPayload, "file holds " + std::to_string(size) +
                                                      " bytes, header implies " +
                                                      std::to_string(expected));
      }
      if (size > expected) {
        throw Error(ErrorKind::kTrailingData, "file holds " + std::to_string(size) +
                                                  " bytes, header implies " +
                                                  std::to_string(expected));
      }
    }
  }

  /// Also checks the file's frame shape against `cfg`.
  TokenStreamReader(const std::string& path, const StreamConfig& cfg) : TokenStreamReader(path) {
    if (header_.tokens_per_frame != cfg.tokens_per_frame || header_.feature_dim != cfg.feature_dim) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "stream is " + std::to_string(header_.tokens_per_frame) + "x" +
                      std::to_string(header_.feature_dim) + " but config expects " +
                      std::to_string(cfg.tokens_per_frame) + "x" + std::to_string(cfg.feature_dim));
    }
  }

  const TokenStreamHeader& header() const { return header_; }

  std::optional<FrameTokens> next() {
    if (emitted_ == header_.frame_count) return std::nullopt;
    std::vector<float> values(std::size_t{header_.tokens_per_frame} * header_.feature_dim);
    io::get_floats(in_, values, "MCTS frame " + std::to_string(emitted_));
    return FrameTokens::raw(header_.tokens_per_frame, header_.feature_dim, std::move(values),
                            emitted_++);
  }

 private:
  std::ifstream in_;
  TokenStreamHeader header_;
  std::uint64_t emitted_ = 0;
};

/// Writes an MCTS file frame by frame. The frame count is patched into the
/// header by finish() (or the destructor).
class TokenStreamWriter {
 public:
  TokenStreamWriter(const std::string& path, std::uint32_t tokens_per_frame, std::uint32_t feature_dim)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc), n_(tokens_per_frame), d_(feature_dim) {
    if (!out_) throw Error(ErrorKind::kIoFailure, "cannot write token stream " + path);
    if (n_ == 0 || d_ == 0) throw Error(ErrorKind::kDimensionMismatch, "empty frame shape");
    io::put_magic(out_, "MCTS");
    io::put_u32(out_, kStreamVersion);
    io::put_u32(out_, 0);
    io::put_u32(out_, n_);
    io::put_u32(out_, d_);
  }

  TokenStreamWriter(const TokenStreamWriter&) = delete;
  TokenStreamWriter& operator=(const TokenStreamWriter&) = delete;

  ~TokenStreamWriter() {
    try {
      finish();
    } catch (...) {
    }
  }

  void write(const FrameTokens& frame) {
    if (frame.tokens_per_frame() != n_ || frame.feature_dim() != d_) {
      throw Error(ErrorKind::kDimensionMismatch, "frame shape does not match the stream header");
    }
    if (count_ == UINT32_MAX) throw Error(ErrorKind::kIoFailure, "too many frames for MCTS");
    io::put_floats(out_, frame.values());
    ++count_;
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    out_.seekp(8);
    io::put_u32(out_, count_);
    out_.flush();
    if (!out_) throw Error(ErrorKind::kIoFailure, "write failed for " + path_);
    out_.close();
  }

  std::uint32_t frames_written() const { return count_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint32_t n_;
  std::uint32_t d_;
  std::uint32_t count_ = 0;
  bool finished_ = false;
};

template <FrameSource Source>
std::uint32_t write_stream(const std::string& path, Source& source, std::uint32_t tokens_per_frame,
                           std::uint32_t feature_dim) {
  TokenStreamWriter writer(path, tokens_per_frame, feature_dim);
  while (auto frame = source.next()) writer.write(*frame);
  writer.finish();
  return writer.frames_written();
}

inline std::uint32_t write_stream(const std::string& path, const std::vector<FrameTokens>& frames,
                                  std::uint32_t tokens_per_frame, std::uint32_t feature_dim) {
  TokenStreamWriter writer(path, tokens_per_frame, feature_dim);
  for (const auto& f : frames) writer.write(f);
  writer.finish();
  return writer.frames_written();
}

/// In-memory source, mostly for tests.
class VectorSource {
 public:
  explicit VectorSource(std::vector<FrameTokens> frames) : frames_(std::move(frames)) {}
  std::optional<FrameTokens> next() {
    if (pos_ == frames_.size()) return std::nullopt;
    return frames_[pos_++];
  }

 private:
  std::vector<FrameTokens> frames_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SyntheticSceneSpec {
  std::uint32_t scene_count = 1;
  std::uint32_t frames_per_scene = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Piecewise-static stream: each scene draws a base frame of unit-norm
/// random tokens and emits `frames_per_scene` noisy copies of it, each
/// token renormalised. Deterministic for a given seed.
class SyntheticStream {
 public:
  SyntheticStream(const SyntheticSceneSpec& spec, const StreamConfig& cfg,
                  std::optional<std::uint64_t> frame_limit = std::nullopt)
      : spec_(spec), n_(cfg.tokens_per_frame), d_(cfg.feature_dim), rng_(spec.seed) {
    if (spec_.scene_count == 0 || spec_.frames_per_scene == 0) {
      throw Error(ErrorKind::kInvalidConfig, "scene_count and frames_per_scene must be positive");
    }
    if (!(spec_.noise_sigma >= 0.0) || !std::isfinite(spec_.noise_sigma)) {
      throw Error(ErrorKind::kInvalidConfig, "noise_sigma must be finite and non-negative");
    }
    total_ = std::uint64_t{spec_.scene_count} * spec_.frames_per_scene;
    if (frame_limit) total_ = std::min(total_, *frame_limit);
  }

  std::uint64_t total_frames() const { return total_; }

  std::optional<FrameTokens> next() {
    if (emitted_ == total_) return std::nullopt;
    if (emitted_ % spec_.frames_per_scene == 0) draw_base();
    std::vector<float> values = base_;
    if (spec_.noise_sigma > 0.0) {
      for (float& v : values) v += static_cast<float>(spec_.noise_sigma * gauss_(rng_));
      normalize_tokens(values);
    }
    return FrameTokens::raw(n_, d_, std::move(values), emitted_++);
  }

 private:
  void draw_base() {
    base_.resize(std::size_t{n_} * d_);
    for (float& v : base_) v = static_cast<float>(gauss_(rng_));
    normalize_tokens(base_);
  }

  void normalize_tokens(std::vector<float>& values) {
    for (std::size_t j = 0; j < n_; ++j) {
      const auto row = std::span<float>(values).subspan(j * d_, d_);
      double sq = 0.0;
      for (float v : row) sq += double{v} * v;
      const double norm = std::sqrt(sq);
      // A Gaussian draw of exactly zero norm does not happen in practice;
      // fall back to a basis vector rather than emit a degenerate token.
      if (norm < kZeroNormEpsilon) {
        std::fill(row.begin(), row.end(), 0.0f);
        row[0] = 1.0f;
        continue;
      }
      for (float& v : row) v = static_cast<float>(v / norm);
    }
  }

  SyntheticSceneSpec spec_;
  std::uint32_t n_;
  std::uint32_t d_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::vector<float> base_;
  std::uint64_t total_ = 0;
  std::uint64_t emitted_ = 0;
};

// ---------------------------------------------------------------------------
// Pipeline driver
// ---------------------------------------------------------------------------

struct Pipeline {
  explicit Pipeline(const StreamConfig& cfg)
      : config((cfg.validate(), cfg)), short_term(cfg), long_term(cfg) {}

  StreamConfig config;
  ShortTermMemory short_term;
  LongTermMemory long_term;
};

struct FlushRecord {
  std::uint64_t input_frames = 0;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_frames = 0;
  std::uint64_t output_tokens = 0;
  std::uint64_t merges = 0;
};

struct PipelineStats {
  std::uint64_t frames = 0;
  std::uint64_t windows = 0;
  std::uint64_t flushes = 0;
  std::uint64_t merges = 0;
  std::uint64_t peak_resident_frames = 0;
  double elapsed_seconds = 0.0;
};

/// Pulls frames in windows of `window_size`, pushes them through short-term
/// memory and consolidates every flush into long-term memory.
///
/// `hooks` may provide any of:
///   before_push(const FrameTokens& current, const Pipeline&)
///   after_push(const Pipeline&, const PipelineStats&)
///   on_flush(const FlushRecord&)
/// Errors are rethrown with the zero-based stream position attached.
template <FrameSource Source, typename Hooks>
PipelineStats drive(Source& source, Pipeline& pipeline, Hooks&& hooks) {
  const auto started = std::chrono::steady_clock::now();
  const StreamConfig& cfg = pipeline.config;
  PipelineStats stats;
  std::vector<FrameTokens> window;
  window.reserve(cfg.window_size);

  auto note_resident = [&](std::uint64_t extra) {
    stats.peak_resident_frames =
        std::max<std::uint64_t>(stats.peak_resident_frames,
                                window.size() + pipeline.short_term.size() + extra);
  };

  std::uint64_t position = 0;
  try {
    for (;;) {
      window.clear();
      while (window.size() < cfg.window_size) {
        position = stats.frames + window.size();
        auto frame = source.next();
        if (!frame) break;
        window.push_back(std::move(*frame));
      }
      if (window.empty()) break;
      ++stats.windows;
      note_resident(0);

      for (auto& frame : window) {
        position = stats.frames;
        if constexpr (requires { hooks.before_push(frame, std::as_const(pipeline)); }) {
          hooks.before_push(std::as_const(frame), std::as_const(pipeline));
        }
        auto flush = pipeline.short_term.push_frame(std::move(frame));
        if (flush) {
          note_resident(flush->frames.size());
          FlushRecord record;
          record.input_frames = flush->frames.size();
          record.input_tokens = record.input_frames * cfg.tokens_per_frame;
          ConsolidationTrace trace;
          auto merged = consolidate(std::move(flush->frames), cfg.consolidated_capacity, &trace);
          record.output_frames = merged.size();
          record.output_tokens = merged.size() * cfg.tokens_per_frame;
          record.merges = trace.merges.size();
          pipeline.long_term.append_consolidated(merged);
          ++stats.flushes;
          stats.merges += record.merges;
          if constexpr (requires { hooks.on_flush(record); }) hooks.on_flush(std::as_const(record));
        }
        ++stats.frames;
        if constexpr (requires { hooks.after_push(std::as_const(pipeline), std::as_const(stats)); }) {
          hooks.after_push(std::as_const(pipeline), std::as_const(stats));
        }
      }
    }
  } catch (Error& e) {
    if (!e.stream_position()) e.at_position(position);
    throw;
  }

  stats.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return stats;
}

struct NoHooks {};

template <FrameSource Source>
PipelineStats drive(Source& source, Pipeline& pipeline) {
  return drive(source, pipeline, NoHooks{});
}

}  // namespace tokmem
