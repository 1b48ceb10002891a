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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace tokmem {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"tokmem"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("MC_CONFIG");
    dir_ = fs::temp_directory_path() / "tokmem_cli_test";
    fs::create_directories(dir_);
  }
  void TearDown() override {
    unsetenv("MC_CONFIG");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, RunSyntheticHundredFrames) {
  const auto r = invoke({"run", "--synthetic", "--frames", "100", "--output", path("g.mcss")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats.at("frames"), 100);
  EXPECT_EQ(stats.at("flushes"), 12);  // floor(99 / 8)
  EXPECT_EQ(stats.at("long_term_tokens"), 768);
  EXPECT_EQ(read_snapshot(path("g.mcss")).token_count(), 768u);
}

TEST_F(Cli, RunZeroFrames) {
  const auto r = invoke({"run", "--synthetic", "--frames", "0", "--output", path("g.mcss")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(fs::file_size(path("g.mcss")), kSnapshotHeaderBytes);
}

TEST_F(Cli, BreakpointAtFrameFive) {
  const auto r = invoke({"run", "--synthetic", "--frames", "20", "--feature-dim", "8", "--output",
                         path("g.mcss"), "--breakpoint", "5", "--breakpoint", "17"});
  ASSERT_EQ(r.code, 0) << r.err;
  // Frame 5 arrives with frames 1..4 in short-term memory: 4*32 + 32.
  const auto bp5 = read_snapshot(cli::breakpoint_path(path("g.mcss"), 5));
  EXPECT_EQ(bp5.token_count(), 160u);
  EXPECT_EQ(bp5.mode, SnapshotMode::kBreakpoint);
  // Frame 17: frames 1..8 were flushed (64 tokens), 9..16 are short-term.
  // Their flush happens when frame 17 is pushed, after the snapshot.
  const auto bp17 = read_snapshot(cli::breakpoint_path(path("g.mcss"), 17));
  EXPECT_EQ(bp17.token_count(), 64u + 8 * 32 + 32);
  const auto stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats.at("breakpoints").size(), 2u);
}

TEST_F(Cli, JsonSnapshots) {
  const auto r = invoke({"run", "--synthetic", "--frames", "12", "--feature-dim", "4", "--json",
                         "--output", path("g.json"), "--breakpoint", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("g.json"));
  const auto snap = snapshot_from_json(nlohmann::json::parse(in));
  EXPECT_EQ(snap.token_count(), 64u);
  std::ifstream bp(cli::breakpoint_path(path("g.json"), 3));
  EXPECT_EQ(snapshot_from_json(nlohmann::json::parse(bp)).token_count(), 96u);
}

TEST_F(Cli, RunFromTokenStreamFile) {
  std::mt19937_64 rng(1);
  write_stream(path("in.mcts"), testing::random_frames(rng, 30, 2, 3), 2, 3);
  const auto r = invoke({"run", "--input", path("in.mcts"), "--tokens-per-frame", "2",
                         "--feature-dim", "3", "--short-cap", "4", "--consolidated", "2",
                         "--output", path("g.mcss")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("flushes"), 7);  // floor(29 / 4)
  EXPECT_EQ(read_snapshot(path("g.mcss")).token_count(), 14u);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream cfg(path("mc.cfg"));
    cfg << "feature_dim = 6\nshort_capacity = 4\n";
  }
  setenv("MC_CONFIG", path("mc.cfg").c_str(), 1);
  auto r = invoke({"run", "--synthetic", "--frames", "9", "--output", path("g.mcss")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats.at("config").at("feature_dim"), 6);
  EXPECT_EQ(stats.at("config").at("short_capacity"), 4);
  EXPECT_EQ(stats.at("flushes"), 2);

  r = invoke({"run", "--synthetic", "--frames", "9", "--short-cap", "8", "--output", path("g.mcss")});
  ASSERT_EQ(r.code, 0) << r.err;
  stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats.at("config").at("feature_dim"), 6);
  EXPECT_EQ(stats.at("config").at("short_capacity"), 8);
  EXPECT_EQ(stats.at("flushes"), 1);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"run", "--synthetic", "--frames", "3"}).code, 2);  // no --output
  EXPECT_EQ(invoke({"run", "--frames", "3", "--output", path("x")}).code, 2);
  EXPECT_EQ(invoke({"run", "--synthetic", "--input", "f", "--output", path("x")}).code, 2);
  EXPECT_EQ(invoke({"run", "--synthetic", "--frames", "x", "--output", path("x")}).code, 2);
  EXPECT_EQ(invoke({"run", "--synthetic", "--consolidated", "48", "--output", path("x")}).code, 2);
  EXPECT_EQ(invoke({"run", "--synthetic", "--breakpoint", "0", "--output", path("x")}).code, 2);
  EXPECT_EQ(invoke({"bench", "--frames", "0", "--csv", path("c"), "--json", path("j")}).code, 2);
  EXPECT_EQ(invoke({"bench", "--frames", "10"}).code, 2);
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST_F(Cli, RuntimeErrorsExitOneWithJson) {
  auto r = invoke({"run", "--input", path("missing.mcts"), "--output", path("g.mcss")});
  EXPECT_EQ(r.code, 1);
  auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err.at("error").at("kind"), "IoFailure");

  std::mt19937_64 rng(2);
  write_stream(path("in.mcts"), testing::random_frames(rng, 3, 2, 3), 2, 3);
  r = invoke({"run", "--input", path("in.mcts"), "--output", path("g.mcss")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("kind"), "DimensionMismatch");

  r = invoke({"run", "--synthetic", "--frames", "4", "--feature-dim", "4", "--breakpoint", "9",
              "--output", path("g.mcss")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("kind"), "IndexOutOfRange");
}

TEST_F(Cli, BenchWritesCsvAndJson) {
  const auto r = invoke({"bench", "--frames", "300", "--checkpoint-every", "100", "--feature-dim",
                         "8", "--csv", path("b.csv"), "--json", path("b.json"), "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(path("b.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kCsvHeader);
  std::ifstream js(path("b.json"));
  const auto report = nlohmann::json::parse(js);
  EXPECT_EQ(report.at("summary").at("amortized_bytes_per_frame_sparse"), 64.0 * 8 * 4 / 8);
}

}  // namespace
}  // namespace tokmem
