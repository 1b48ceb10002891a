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
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokmem/binary_io.hpp"
#include "tokmem/error.hpp"
#include "tokmem/long_memory.hpp"
#include "tokmem/short_memory.hpp"
#include "tokmem/token.hpp"

namespace tokmem {

enum class SnapshotMode : std::uint8_t { kGlobal = 0, kBreakpoint = 1 };

/// Where a snapshot token came from.
enum class TokenOrigin : std::uint8_t { kLongTerm = 0, kShortTerm = 1, kCurrent = 2 };

struct Provenance {
  TokenOrigin origin = TokenOrigin::kLongTerm;
  SourceRange range;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// The exported video representation: a flat token sequence with one
/// positional index and one provenance record per token.
struct MemorySnapshot {
  SnapshotMode mode = SnapshotMode::kGlobal;
  std::uint32_t feature_dim = 0;
  std::vector<float> values;  // token_count() x feature_dim, row-major
  std::vector<std::uint32_t> positional_indices;
  std::vector<Provenance> provenance;

  std::size_t token_count() const { return positional_indices.size(); }
  std::uint64_t byte_cost() const { return std::uint64_t{token_count()} * feature_dim * sizeof(float); }
  Token token(std::size_t i) const {
    return std::span<const float>(values).subspan(i * feature_dim, feature_dim);
  }

  friend bool operator==(const MemorySnapshot&, const MemorySnapshot&) = default;
};

namespace detail {

inline void append_frame(MemorySnapshot& s, const FrameTokens& f, TokenOrigin origin) {
  const auto v = f.values();
  s.values.insert(s.values.end(), v.begin(), v.end());
  for (std::uint32_t j = 0; j < f.tokens_per_frame(); ++j) {
    s.positional_indices.push_back(static_cast<std::uint32_t>(s.positional_indices.size()));
    s.provenance.push_back({origin, f.source_range()});
  }
}

inline MemorySnapshot long_term_part(const LongTermMemory& ltm, SnapshotMode mode) {
  MemorySnapshot s;
  s.mode = mode;
  s.feature_dim = ltm.feature_dim();
  s.values.reserve(ltm.total_tokens() * ltm.feature_dim());
  for (const auto& f : ltm.frames()) detail::append_frame(s, f, TokenOrigin::kLongTerm);
  // Long-term tokens carry the indices the store assigned.
  s.positional_indices = ltm.positional_indices();
  return s;
}

}  // namespace detail

/// Global mode: long-term memory only.
inline MemorySnapshot assemble_global(const LongTermMemory& ltm) {
  return detail::long_term_part(ltm, SnapshotMode::kGlobal);
}

/// Breakpoint mode: long-term ++ short-term ++ current frame. Indices for
/// the short-term and current tokens continue after the long-term ones.
inline MemorySnapshot assemble_breakpoint(const LongTermMemory& ltm, const ShortTermMemory& stm,
                                          const FrameTokens& current) {
  if (current.tokens_per_frame() != ltm.tokens_per_frame() ||
      current.feature_dim() != ltm.feature_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "current frame shape differs from memory");
  }
  std::optional<std::uint64_t> newest = stm.last_pushed();
  if (!newest && !ltm.empty()) newest = ltm.frames().back().source_range().last;
  if (newest && current.source_range().first != *newest + 1) {
    throw Error(ErrorKind::kStaleCurrent, "current frame " +
                                              std::to_string(current.source_range().first) +
                                              " does not follow frame " + std::to_string(*newest));
  }
  MemorySnapshot s = detail::long_term_part(ltm, SnapshotMode::kBreakpoint);
  for (const auto& f : stm.frames()) detail::append_frame(s, f, TokenOrigin::kShortTerm);
  detail::append_frame(s, current, TokenOrigin::kCurrent);
  return s;
}

// ---------------------------------------------------------------------------
// MCSS snapshot files
//
//   "MCSS"
//   u8  mode (0 global, 1 breakpoint)
//   u32 token count M
//   u32 feature dim D
//   u32 positional index  x M
//   f32 token values      x M*D, row-major
//   provenance            x M: u8 origin, u64 first, u64 last
//
// Little-endian throughout; an empty snapshot is the 13-byte header.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSnapshotHeaderBytes = 13;
inline constexpr std::size_t kProvenanceRecordBytes = 17;

inline void write_snapshot(const MemorySnapshot& s, std::ostream& out) {
  io::put_magic(out, "MCSS");
  io::put_u8(out, static_cast<std::uint8_t>(s.mode));
  io::put_u32(out, static_cast<std::uint32_t>(s.token_count()));
  io::put_u32(out, s.feature_dim);
  for (auto idx : s.positional_indices) io::put_u32(out, idx);
  io::put_floats(out, s.values);
  for (const auto& p : s.provenance) {
    io::put_u8(out, static_cast<std::uint8_t>(p.origin));
    io::put_u64(out, p.range.first);
    io::put_u64(out, p.range.last);
  }
}

inline void export_snapshot(const MemorySnapshot& s, const std::string& path) {
  if (s.values.size() != s.token_count() * std::size_t{s.feature_dim} ||
      s.provenance.size() != s.token_count()) {
    throw Error(ErrorKind::kDimensionMismatch, "inconsistent snapshot");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write snapshot " + path);
  write_snapshot(s, out);
  if (!out.flush()) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

inline MemorySnapshot read_snapshot(std::istream& in) {
  io::expect_magic(in, "MCSS");
  MemorySnapshot s;
  const auto mode = io::get_u8(in, "MCSS mode");
  if (mode > 1) throw Error(ErrorKind::kBadMagic, "unknown snapshot mode " + std::to_string(mode));
  s.mode = static_cast<SnapshotMode>(mode);
  const std::uint32_t count = io::get_u32(in, "MCSS token count");
  s.feature_dim = io::get_u32(in, "MCSS feature dim");
  s.positional_indices.resize(count);
  for (auto& idx : s.positional_indices) idx = io::get_u32(in, "MCSS positional indices");
  s.values.resize(std::size_t{count} * s.feature_dim);
  io::get_floats(in, s.values, "MCSS token values");
  s.provenance.resize(count);
  for (auto& p : s.provenance) {
    const auto origin = io::get_u8(in, "MCSS provenance");
    if (origin > 2) throw Error(ErrorKind::kBadMagic, "unknown token origin " + std::to_string(origin));
    p.origin = static_cast<TokenOrigin>(origin);
    p.range.first = io::get_u64(in, "MCSS provenance");
    p.range.last = io::get_u64(in, "MCSS provenance");
  }
  io::expect_eof(in, "MCSS snapshot");
  return s;
}

inline MemorySnapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open snapshot " + path);
  return read_snapshot(in);
}

// JSON form carries the same fields; floats round-trip exactly.

constexpr std::string_view to_string(SnapshotMode m) {
  return m == SnapshotMode::kGlobal ? "global" : "breakpoint";
}

constexpr std::string_view to_string(TokenOrigin o) {
  switch (o) {
    case TokenOrigin::kLongTerm: return "long_term";
    case TokenOrigin::kShortTerm: return "short_term";
    case TokenOrigin::kCurrent: return "current";
  }
  return "unknown";
}

inline nlohmann::json to_json(const MemorySnapshot& s) {
  nlohmann::json tokens = nlohmann::json::array();
  for (std::size_t i = 0; i < s.token_count(); ++i) {
    const auto t = s.token(i);
    tokens.push_back(std::vector<float>(t.begin(), t.end()));
  }
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : s.provenance) {
    prov.push_back({{"origin", to_string(p.origin)}, {"first", p.range.first}, {"last", p.range.last}});
  }
  return {
      {"mode", to_string(s.mode)},
      {"token_count", s.token_count()},
      {"feature_dim", s.feature_dim},
      {"byte_cost", s.byte_cost()},
      {"positional_indices", s.positional_indices},
      {"tokens", std::move(tokens)},
      {"provenance", std::move(prov)},
  };
}

inline MemorySnapshot snapshot_from_json(const nlohmann::json& j) {
  try {
    MemorySnapshot s;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "global") {
      s.mode = SnapshotMode::kGlobal;
    } else if (mode == "breakpoint") {
      s.mode = SnapshotMode::kBreakpoint;
    } else {
      throw Error(ErrorKind::kBadMagic, "unknown snapshot mode '" + mode + "'");
    }
    s.feature_dim = j.at("feature_dim").get<std::uint32_t>();
    s.positional_indices = j.at("positional_indices").get<std::vector<std::uint32_t>>();
    for (const auto& t : j.at("tokens")) {
      auto row = t.get<std::vector<float>>();
      if (row.size() != s.feature_dim) throw Error(ErrorKind::kDimensionMismatch, "token width");
      s.values.insert(s.values.end(), row.begin(), row.end());
    }
    for (const auto& p : j.at("provenance")) {
      const auto origin = p.at("origin").get<std::string>();
      Provenance rec;
      if (origin == "long_term") {
        rec.origin = TokenOrigin::kLongTerm;
      } else if (origin == "short_term") {
        rec.origin = TokenOrigin::kShortTerm;
      } else if (origin == "current") {
        rec.origin = TokenOrigin::kCurrent;
      } else {
        throw Error(ErrorKind::kBadMagic, "unknown token origin '" + origin + "'");
      }
      rec.range = {p.at("first").get<std::uint64_t>(), p.at("last").get<std::uint64_t>()};
      s.provenance.push_back(rec);
    }
    if (s.values.size() != s.token_count() * std::size_t{s.feature_dim} ||
        s.provenance.size() != s.token_count()) {
      throw Error(ErrorKind::kDimensionMismatch, "inconsistent snapshot");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kBadMagic, std::string("malformed snapshot JSON: ") + e.what());
  }
}

inline void export_snapshot_json(const MemorySnapshot& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write snapshot " + path);
  out << to_json(s).dump() << '\n';
  if (!out.flush()) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

}  // namespace tokmem
