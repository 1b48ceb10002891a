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

#include "tokmem/snapshot.hpp"

#include <filesystem>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "tokmem/stream.hpp"

namespace tokmem {
namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("tokmem_snapshot_" + name)).string();
}

// Drives `frames` synthetic frames, then returns the pipeline plus the next
// frame (not yet pushed) to use as "current".
std::pair<Pipeline, FrameTokens> pipeline_at(const StreamConfig& cfg, std::uint64_t frames,
                                             std::uint64_t seed = 1) {
  Pipeline p(cfg);
  SyntheticStream source({20, 1000, 0.01, seed}, cfg, frames + 1);
  struct StopBefore {
    std::uint64_t limit;
    SyntheticStream& src;
    std::optional<FrameTokens> next() {
      if (limit == 0) return std::nullopt;
      --limit;
      return src.next();
    }
  } head{frames, source};
  drive(head, p);
  auto current = source.next();
  return {std::move(p), std::move(*current)};
}

TEST(AssembleGlobal, EmptyMemory) {
  StreamConfig cfg;
  LongTermMemory ltm(cfg);
  const auto s = assemble_global(ltm);
  EXPECT_EQ(s.mode, SnapshotMode::kGlobal);
  EXPECT_EQ(s.token_count(), 0u);
  EXPECT_EQ(s.byte_cost(), 0u);
}

TEST(AssembleGlobal, OneFlushAtDefaults) {
  StreamConfig cfg;
  auto [p, current] = pipeline_at(cfg, 9);
  const auto s = assemble_global(p.long_term);
  EXPECT_EQ(s.token_count(), 64u);
  EXPECT_EQ(s.feature_dim, 768u);
  EXPECT_EQ(s.byte_cost(), 196608u);
  for (std::uint32_t i = 0; i < 64; ++i) EXPECT_EQ(s.positional_indices[i], i);
  for (const auto& pr : s.provenance) EXPECT_EQ(pr.origin, TokenOrigin::kLongTerm);
}

TEST(AssembleGlobal, TokenCountAfterTenThousandFrames) {
  StreamConfig cfg;
  cfg.feature_dim = 8;
  auto [p, current] = pipeline_at(cfg, 10000);
  EXPECT_EQ(assemble_global(p.long_term).token_count(), 64u * (9999 / 8));
}

TEST(AssembleGlobal, FlattensLongTermInOrder) {
  StreamConfig cfg;
  cfg.feature_dim = 3;
  auto [p, current] = pipeline_at(cfg, 50);
  const auto s = assemble_global(p.long_term);
  std::size_t t = 0;
  for (const auto& f : p.long_term.frames()) {
    for (std::size_t j = 0; j < f.tokens_per_frame(); ++j, ++t) {
      ASSERT_TRUE(std::ranges::equal(s.token(t), f.token(j)));
      ASSERT_EQ(s.provenance[t].range, f.source_range());
    }
  }
  EXPECT_EQ(t, s.token_count());
}

TEST(AssembleBreakpoint, StreamStartIsJustTheCurrentFrame) {
  StreamConfig cfg;
  cfg.feature_dim = 4;
  auto [p, current] = pipeline_at(cfg, 0);
  const auto s = assemble_breakpoint(p.long_term, p.short_term, current);
  EXPECT_EQ(s.mode, SnapshotMode::kBreakpoint);
  EXPECT_EQ(s.token_count(), 32u);
  EXPECT_TRUE(std::ranges::equal(s.values, current.values()));
  for (const auto& pr : s.provenance) EXPECT_EQ(pr.origin, TokenOrigin::kCurrent);
}

TEST(AssembleBreakpoint, MidStreamConcatenation) {
  StreamConfig cfg;
  cfg.feature_dim = 4;
  // 19 frames pushed: two flushes (128 long-term tokens), 3 frames short-term.
  auto [p, current] = pipeline_at(cfg, 19);
  ASSERT_EQ(p.long_term.total_tokens(), 128u);
  ASSERT_EQ(p.short_term.size(), 3u);
  const auto s = assemble_breakpoint(p.long_term, p.short_term, current);
  EXPECT_EQ(s.token_count(), 256u);

  std::size_t counts[3] = {0, 0, 0};
  for (const auto& pr : s.provenance) ++counts[static_cast<int>(pr.origin)];
  EXPECT_EQ(counts[0], 128u);
  EXPECT_EQ(counts[1], 96u);
  EXPECT_EQ(counts[2], 32u);
  EXPECT_EQ(counts[0] + counts[1] + counts[2], s.token_count());

  for (std::uint32_t i = 0; i < s.token_count(); ++i) EXPECT_EQ(s.positional_indices[i], i);
  for (std::size_t i = 1; i < s.provenance.size(); ++i) {
    EXPECT_LE(s.provenance[i - 1].range.first, s.provenance[i].range.first);
  }
  EXPECT_EQ(s.provenance.back().range, current.source_range());
}

TEST(AssembleBreakpoint, DoesNotMutateMemories) {
  StreamConfig cfg;
  cfg.feature_dim = 4;
  auto [p, current] = pipeline_at(cfg, 30);
  const auto before = assemble_global(p.long_term);
  const auto short_before = p.short_term.contents();
  assemble_breakpoint(p.long_term, p.short_term, current);
  EXPECT_EQ(assemble_global(p.long_term), before);
  EXPECT_EQ(p.short_term.contents(), short_before);
}

TEST(AssembleBreakpoint, StaleCurrent) {
  StreamConfig cfg;
  cfg.feature_dim = 4;
  auto [p, current] = pipeline_at(cfg, 12);
  const auto stale = p.short_term.frames().back();
  try {
    assemble_breakpoint(p.long_term, p.short_term, stale);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStaleCurrent);
  }
  const auto wrong_shape = FrameTokens::raw(1, 4, {1, 0, 0, 0}, 12);
  EXPECT_THROW(assemble_breakpoint(p.long_term, p.short_term, wrong_shape), Error);
}

TEST(SnapshotFile, EmptySnapshotIsHeaderOnly) {
  StreamConfig cfg;
  LongTermMemory ltm(cfg);
  const auto path = temp_path("empty.mcss");
  export_snapshot(assemble_global(ltm), path);
  EXPECT_EQ(fs::file_size(path), kSnapshotHeaderBytes);
  const auto back = read_snapshot(path);
  EXPECT_EQ(back.token_count(), 0u);
  EXPECT_EQ(back.feature_dim, 768u);
  fs::remove(path);
}

TEST(SnapshotFile, SizeAndRoundTrip) {
  StreamConfig cfg;
  auto [p, current] = pipeline_at(cfg, 19);
  const auto s = assemble_breakpoint(p.long_term, p.short_term, current);
  ASSERT_EQ(s.token_count(), 256u);
  const auto path = temp_path("bp.mcss");
  export_snapshot(s, path);
  // header + indices + values + provenance
  EXPECT_EQ(fs::file_size(path), 13u + 256u * 4 + 256u * 768 * 4 + 256u * 17);
  EXPECT_EQ(read_snapshot(path), s);
  fs::remove(path);
}

TEST(SnapshotFile, JsonRoundTrip) {
  StreamConfig cfg;
  cfg.feature_dim = 5;
  auto [p, current] = pipeline_at(cfg, 27);
  const auto s = assemble_breakpoint(p.long_term, p.short_term, current);
  const auto path = temp_path("bp.json");
  export_snapshot_json(s, path);
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("mode"), "breakpoint");
  EXPECT_EQ(j.at("byte_cost"), s.byte_cost());
  EXPECT_EQ(snapshot_from_json(j), s);
  fs::remove(path);
}

TEST(SnapshotFile, Malformed) {
  const auto path = temp_path("bad.mcss");
  StreamConfig cfg;
  cfg.feature_dim = 2;
  auto [p, current] = pipeline_at(cfg, 9);
  export_snapshot(assemble_global(p.long_term), path);
  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 3);
  try {
    read_snapshot(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTruncatedPayload);
  }
  fs::resize_file(path, 2);
  EXPECT_THROW(read_snapshot(path), Error);
  EXPECT_THROW(read_snapshot(temp_path("missing.mcss")), Error);
  fs::remove(path);
}

}  // namespace
}  // namespace tokmem
