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

// Command-line front end: `run` drives a stream into memory and exports
// snapshots, `bench` records the memory-cost curve.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "tokmem/tokmem.hpp"

namespace tokmem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Flags that override StreamConfig fields when present.
struct ConfigFlags {
  std::optional<std::uint32_t> tokens_per_frame;
  std::optional<std::uint32_t> feature_dim;
  std::optional<std::uint32_t> window_size;
  std::optional<std::uint32_t> short_capacity;
  std::optional<std::uint32_t> consolidated_capacity;
  std::optional<std::uint32_t> base_pe_length;
  std::optional<double> pe_alpha;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--tokens-per-frame", tokens_per_frame, "Tokens per frame (N)");
    cmd.add_option("--feature-dim", feature_dim, "Token feature dimension (D)");
    cmd.add_option("--window", window_size, "Frames read per window (C)");
    cmd.add_option("--short-cap", short_capacity, "Short-term capacity in frames (K)");
    cmd.add_option("--consolidated", consolidated_capacity, "Tokens kept per consolidation");
    cmd.add_option("--pe-length", base_pe_length, "Base positional table length (n)");
    cmd.add_option("--pe-alpha", pe_alpha, "Positional decomposition weight");
  }

  void apply(StreamConfig& cfg) const {
    if (tokens_per_frame) cfg.tokens_per_frame = *tokens_per_frame;
    if (feature_dim) cfg.feature_dim = *feature_dim;
    if (window_size) cfg.window_size = *window_size;
    if (short_capacity) cfg.short_capacity = *short_capacity;
    if (consolidated_capacity) cfg.consolidated_capacity = *consolidated_capacity;
    if (base_pe_length) cfg.base_pe_length = *base_pe_length;
    if (pe_alpha) cfg.pe_alpha = *pe_alpha;
  }
};

/// defaults < file named by MC_CONFIG < flags.
inline StreamConfig resolve_config(const ConfigFlags& flags) {
  StreamConfig cfg;
  if (const char* path = std::getenv("MC_CONFIG"); path && *path) apply_config_file(cfg, path);
  flags.apply(cfg);
  cfg.validate();
  return cfg;
}

inline void report_error(std::ostream& err, const Error& e) {
  nlohmann::json body = {{"kind", to_string(e.kind())}, {"message", e.detail()}};
  if (e.stream_position()) body["stream_position"] = *e.stream_position();
  err << nlohmann::json{{"error", body}}.dump() << '\n';
}

inline void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

struct RunOptions {
  ConfigFlags config;
  std::optional<std::string> input;
  bool synthetic = false;
  std::uint64_t frames = 0;
  std::uint32_t scenes = 10;
  double noise = 0.01;
  std::uint64_t seed = 0;
  std::string output;
  std::vector<std::uint64_t> breakpoints;
  bool json = false;
};

struct BenchOptions {
  ConfigFlags config;
  std::uint64_t frames = 0;
  std::uint64_t checkpoint_every = 100;
  std::string csv;
  std::string json;
  std::uint64_t seed = 0;
  std::uint32_t frames_per_scene = 50;
  double noise = 0.01;
};

inline SyntheticSceneSpec scenes_for(std::uint64_t frames, std::uint32_t scenes, double noise,
                                     std::uint64_t seed) {
  SyntheticSceneSpec spec;
  spec.scene_count = std::max<std::uint32_t>(scenes, 1);
  const std::uint64_t per_scene = (frames + spec.scene_count - 1) / spec.scene_count;
  spec.frames_per_scene = static_cast<std::uint32_t>(std::max<std::uint64_t>(per_scene, 1));
  spec.noise_sigma = noise;
  spec.seed = seed;
  return spec;
}

inline void write_snapshot_file(const MemorySnapshot& s, const std::string& path, bool json) {
  if (json) {
    export_snapshot_json(s, path);
  } else {
    export_snapshot(s, path);
  }
}

/// Breakpoint snapshots go next to the main output as <output>.bp<frame>.
inline std::string breakpoint_path(const std::string& output, std::uint64_t frame) {
  return output + ".bp" + std::to_string(frame);
}

inline int run_command(const RunOptions& opt, const StreamConfig& cfg, std::ostream& out) {
  Pipeline pipeline(cfg);

  // Breakpoint IDX is the 1-based number of the frame that is "current":
  // the snapshot is taken as it arrives, before it enters short-term memory.
  struct BreakpointHooks {
    const RunOptions& opt;
    std::set<std::uint64_t> pending;
    nlohmann::json taken = nlohmann::json::array();
    std::uint64_t seen = 0;

    void before_push(const FrameTokens& current, const Pipeline& p) {
      ++seen;
      if (!pending.erase(seen)) return;
      const auto snap = assemble_breakpoint(p.long_term, p.short_term, current);
      const auto path = breakpoint_path(opt.output, seen);
      write_snapshot_file(snap, path, opt.json);
      taken.push_back({{"frame", seen}, {"tokens", snap.token_count()},
                       {"byte_cost", snap.byte_cost()}, {"path", path}});
    }
  } hooks{opt, {opt.breakpoints.begin(), opt.breakpoints.end()}};

  PipelineStats stats;
  if (opt.input) {
    TokenStreamReader reader(*opt.input, cfg);
    stats = drive(reader, pipeline, hooks);
  } else {
    SyntheticStream source(scenes_for(opt.frames, opt.scenes, opt.noise, opt.seed), cfg, opt.frames);
    stats = drive(source, pipeline, hooks);
  }

  const auto global = assemble_global(pipeline.long_term);
  write_snapshot_file(global, opt.output, opt.json);

  nlohmann::json report = stats_to_json(stats);
  report["config"] = config_to_json(cfg);
  report["long_term_tokens"] = pipeline.long_term.total_tokens();
  report["short_term_frames"] = pipeline.short_term.size();
  report["snapshot"] = {{"path", opt.output}, {"tokens", global.token_count()},
                        {"byte_cost", global.byte_cost()}};
  report["breakpoints"] = hooks.taken;
  out << report.dump() << '\n';

  if (!hooks.pending.empty()) {
    throw Error(ErrorKind::kIndexOutOfRange,
                "breakpoint frame " + std::to_string(*hooks.pending.begin()) +
                    " lies beyond the end of the stream (" + std::to_string(stats.frames) +
                    " frames)");
  }
  return kExitOk;
}

inline int bench_command(const BenchOptions& opt, const StreamConfig& cfg, std::ostream& out) {
  SyntheticSceneSpec scenes;
  scenes.frames_per_scene = std::max<std::uint32_t>(opt.frames_per_scene, 1);
  scenes.scene_count = static_cast<std::uint32_t>(
      std::max<std::uint64_t>((opt.frames + scenes.frames_per_scene - 1) / scenes.frames_per_scene, 1));
  scenes.noise_sigma = opt.noise;
  scenes.seed = opt.seed;

  const auto report = run_bench(cfg, scenes, opt.frames, opt.checkpoint_every);

  std::ofstream csv(opt.csv, std::ios::trunc);
  if (!csv) throw Error(ErrorKind::kIoFailure, "cannot write " + opt.csv);
  write_csv(report, csv);
  if (!csv.flush()) throw Error(ErrorKind::kIoFailure, "write failed for " + opt.csv);

  const auto json = to_json(report);
  std::ofstream js(opt.json, std::ios::trunc);
  if (!js) throw Error(ErrorKind::kIoFailure, "cannot write " + opt.json);
  js << json.dump(2) << '\n';
  if (!js.flush()) throw Error(ErrorKind::kIoFailure, "write failed for " + opt.json);

  out << nlohmann::json{{"summary", json["summary"]}, {"stats", json["stats"]}}.dump() << '\n';
  return kExitOk;
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Streaming short/long-term token memory"};
  app.name("tokmem");
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Ingest a stream and export memory snapshots");
  run.config.add_to(*run_cmd);
  auto* input_opt = run_cmd->add_option("--input", run.input, "MCTS token-stream file");
  auto* synth_opt = run_cmd->add_flag("--synthetic", run.synthetic, "Use a synthetic scene stream");
  input_opt->excludes(synth_opt);
  run_cmd->add_option("--frames", run.frames, "Synthetic frame count");
  run_cmd->add_option("--scenes", run.scenes, "Synthetic scene count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--noise", run.noise, "Synthetic per-frame noise sigma")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--seed", run.seed, "Synthetic RNG seed");
  run_cmd->add_option("--output", run.output, "Global snapshot path")->required();
  run_cmd->add_option("--breakpoint", run.breakpoints, "1-based frame for a breakpoint snapshot")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--json", run.json, "Write snapshots as JSON instead of MCSS");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Record resident token bytes against frame count");
  bench.config.add_to(*bench_cmd);
  bench_cmd->add_option("--frames", bench.frames, "Frames to ingest")->required()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--checkpoint-every", bench.checkpoint_every, "Frames between report rows")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--csv", bench.csv, "CSV output path")->required();
  bench_cmd->add_option("--json", bench.json, "JSON report path")->required();
  bench_cmd->add_option("--seed", bench.seed, "Synthetic RNG seed");
  bench_cmd->add_option("--frames-per-scene", bench.frames_per_scene, "Synthetic scene length")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--noise", bench.noise, "Synthetic per-frame noise sigma")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << app.get_name() << ": " << e.what() << '\n';
    return kExitUsage;
  }

  StreamConfig cfg;
  try {
    if (run_cmd->parsed() && !run.input && !run.synthetic) {
      throw Error(ErrorKind::kInvalidConfig, "run needs --input or --synthetic");
    }
    cfg = resolve_config(run_cmd->parsed() ? run.config : bench.config);
  } catch (const Error& e) {
    report_error(err, e);
    return e.kind() == ErrorKind::kIoFailure ? kExitRuntime : kExitUsage;
  }

  try {
    return run_cmd->parsed() ? run_command(run, cfg, out) : bench_command(bench, cfg, out);
  } catch (const Error& e) {
    report_error(err, e);
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what());
  }
  return kExitRuntime;
}

}  // namespace tokmem::cli
