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
#include <string>
#include <string_view>

#include "tokmem/error.hpp"

namespace tokmem {

/// How the short-term buffer hands frames to consolidation. Only kBatch is
/// implemented; kPerFrame is reserved and rejected at construction.
enum class FlushPolicy { kBatch, kPerFrame };

/// Stream shape and memory budgets. Defaults follow the reference
/// hyper-parameters: 10-frame windows, 8 frames x 32 tokens of short-term
/// memory, 64 tokens per consolidation.
struct StreamConfig {
  std::uint32_t tokens_per_frame = 32;
  std::uint32_t feature_dim = 768;
  std::uint32_t window_size = 10;
  std::uint32_t short_capacity = 8;
  std::uint32_t consolidated_capacity = 64;
  std::uint32_t base_pe_length = 512;
  double pe_alpha = 0.4;
  FlushPolicy flush_policy = FlushPolicy::kBatch;

  std::uint32_t consolidated_frames() const {
    return consolidated_capacity / tokens_per_frame;
  }

  /// Largest number of addressable positional indices (n squared).
  std::uint64_t max_positions() const {
    return std::uint64_t{base_pe_length} * base_pe_length;
  }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::kInvalidConfig, what);
    };
    require(tokens_per_frame >= 1, "tokens_per_frame must be positive");
    require(feature_dim >= 1, "feature_dim must be positive");
    require(window_size >= 1, "window_size must be positive");
    require(short_capacity >= 1, "short_capacity must be positive");
    require(consolidated_capacity >= 1, "consolidated_capacity must be positive");
    require(base_pe_length >= 1, "base_pe_length must be positive");
    require(base_pe_length <= 65536, "base_pe_length squared must fit 32-bit positional indices");
    require(consolidated_capacity % tokens_per_frame == 0,
            "consolidated_capacity must be a multiple of tokens_per_frame");
    require(consolidated_frames() < short_capacity,
            "consolidated_capacity / tokens_per_frame must be below short_capacity");
    require(std::isfinite(pe_alpha) && pe_alpha > 0.0 && pe_alpha < 1.0 && pe_alpha != 0.5,
            "pe_alpha must lie in (0, 1) and differ from 0.5");
    require(flush_policy == FlushPolicy::kBatch, "only the batch flush policy is supported");
  }

  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::uint32_t parse_u32(std::string_view key, std::string_view text) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text.front() == '-' || value > UINT32_MAX) {
    throw Error(ErrorKind::kInvalidConfig,
                "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return static_cast<std::uint32_t>(value);
}

inline double parse_real(std::string_view key, std::string_view text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw Error(ErrorKind::kInvalidConfig,
                "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Sets one StreamConfig field by its name. Unknown keys are rejected.
inline void set_config_field(StreamConfig& cfg, std::string_view key, std::string_view value) {
  using detail::parse_real;
  using detail::parse_u32;
  if (key == "tokens_per_frame") {
    cfg.tokens_per_frame = parse_u32(key, value);
  } else if (key == "feature_dim") {
    cfg.feature_dim = parse_u32(key, value);
  } else if (key == "window_size") {
    cfg.window_size = parse_u32(key, value);
  } else if (key == "short_capacity") {
    cfg.short_capacity = parse_u32(key, value);
  } else if (key == "consolidated_capacity") {
    cfg.consolidated_capacity = parse_u32(key, value);
  } else if (key == "base_pe_length") {
    cfg.base_pe_length = parse_u32(key, value);
  } else if (key == "pe_alpha") {
    cfg.pe_alpha = parse_real(key, value);
  } else {
    throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + std::string(key) + "'");
  }
}

/// Applies `key = value` lines on top of `cfg`. Blank lines and lines
/// starting with '#' are ignored.
inline void apply_config_text(StreamConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key=value");
    }
    set_config_field(cfg, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
  }
}

inline void apply_config_file(StreamConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open config file " + path);
  apply_config_text(cfg, in);
}

}  // namespace tokmem
