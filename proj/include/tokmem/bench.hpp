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
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokmem/config.hpp"
#include "tokmem/stream.hpp"

namespace tokmem {

/// "Memory cost" here is the float32 payload of resident tokens. It is not
/// process RSS and not accelerator memory: encoders and activations are not
/// part of this library, so only the token store itself is measured.
inline constexpr std::string_view kCostDefinition =
    "resident token-storage bytes (float32 payload of short-term + long-term tokens); "
    "not process RSS or GPU memory";

inline constexpr std::string_view kCsvHeader =
    "frames_ingested,resident_token_bytes_sparse,resident_token_bytes_dense_baseline,flush_count";

struct CostRow {
  std::uint64_t frames_ingested = 0;
  std::uint64_t sparse_bytes = 0;
  std::uint64_t dense_bytes = 0;
  std::uint64_t flush_count = 0;
  friend bool operator==(const CostRow&, const CostRow&) = default;
};

struct MemoryCostReport {
  StreamConfig config;
  SyntheticSceneSpec scenes;
  std::uint64_t frames = 0;
  std::uint64_t checkpoint_every = 0;
  std::vector<CostRow> rows;
  double amortized_bytes_per_frame_sparse = 0.0;
  double bytes_per_frame_dense = 0.0;
  PipelineStats stats;
};

/// Closed-form resident cost after `frames` pushes under batch flushing.
inline CostRow expected_cost(const StreamConfig& cfg, std::uint64_t frames) {
  const std::uint64_t token_bytes = std::uint64_t{cfg.feature_dim} * sizeof(float);
  CostRow row;
  row.frames_ingested = frames;
  row.flush_count = frames == 0 ? 0 : (frames - 1) / cfg.short_capacity;
  const std::uint64_t short_frames = frames - row.flush_count * cfg.short_capacity;
  const std::uint64_t long_tokens = row.flush_count * cfg.consolidated_capacity;
  row.sparse_bytes = token_bytes * (short_frames * cfg.tokens_per_frame + long_tokens);
  row.dense_bytes = token_bytes * cfg.tokens_per_frame * frames;
  return row;
}

/// Per-frame slope of long-term growth once warmed up.
inline double expected_amortized_bytes_per_frame(const StreamConfig& cfg) {
  return static_cast<double>(std::uint64_t{cfg.consolidated_capacity} * cfg.feature_dim *
                             sizeof(float)) /
         cfg.short_capacity;
}

/// Ingests a synthetic stream and samples resident token bytes every
/// `checkpoint_every` frames (plus the final frame). Each sample is checked
/// against expected_cost(); a mismatch throws std::logic_error.
inline MemoryCostReport run_bench(const StreamConfig& cfg, const SyntheticSceneSpec& scenes,
                                  std::uint64_t frames, std::uint64_t checkpoint_every) {
  if (frames == 0) throw Error(ErrorKind::kInvalidConfig, "bench needs at least one frame");
  if (checkpoint_every == 0) throw Error(ErrorKind::kInvalidConfig, "checkpoint interval must be positive");

  MemoryCostReport report;
  report.config = cfg;
  report.scenes = scenes;
  report.frames = frames;
  report.checkpoint_every = checkpoint_every;

  Pipeline pipeline(cfg);
  SyntheticStream source(scenes, cfg, frames);
  const std::uint64_t token_bytes = std::uint64_t{cfg.feature_dim} * sizeof(float);

  struct Sampler {
    MemoryCostReport& report;
    std::uint64_t token_bytes;
    std::uint64_t total;

    void after_push(const Pipeline& p, const PipelineStats& stats) {
      if (stats.frames % report.checkpoint_every != 0 && stats.frames != total) return;
      CostRow row;
      row.frames_ingested = stats.frames;
      row.flush_count = stats.flushes;
      row.sparse_bytes =
          token_bytes * (p.short_term.size() * p.config.tokens_per_frame + p.long_term.total_tokens());
      row.dense_bytes = token_bytes * p.config.tokens_per_frame * stats.frames;
      if (row != expected_cost(p.config, stats.frames)) {
        throw std::logic_error("resident bytes diverge from the analytic formula at frame " +
                               std::to_string(stats.frames));
      }
      report.rows.push_back(row);
    }
  } sampler{report, token_bytes, source.total_frames()};

  report.stats = drive(source, pipeline, sampler);

  const auto& ltm = pipeline.long_term;
  if (ltm.covered_frames() > 0) {
    report.amortized_bytes_per_frame_sparse =
        static_cast<double>(ltm.total_tokens() * token_bytes) / static_cast<double>(ltm.covered_frames());
    if (report.amortized_bytes_per_frame_sparse != expected_amortized_bytes_per_frame(cfg)) {
      throw std::logic_error("amortized long-term cost diverges from the analytic formula");
    }
  }
  report.bytes_per_frame_dense = static_cast<double>(token_bytes * cfg.tokens_per_frame);
  return report;
}

inline void write_csv(const MemoryCostReport& report, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.frames_ingested << ',' << r.sparse_bytes << ',' << r.dense_bytes << ','
        << r.flush_count << '\n';
  }
}

inline nlohmann::json config_to_json(const StreamConfig& cfg) {
  return {
      {"tokens_per_frame", cfg.tokens_per_frame},
      {"feature_dim", cfg.feature_dim},
      {"window_size", cfg.window_size},
      {"short_capacity", cfg.short_capacity},
      {"consolidated_capacity", cfg.consolidated_capacity},
      {"base_pe_length", cfg.base_pe_length},
      {"pe_alpha", cfg.pe_alpha},
  };
}

inline nlohmann::json stats_to_json(const PipelineStats& s) {
  return {
      {"frames", s.frames},
      {"windows", s.windows},
      {"flushes", s.flushes},
      {"merges", s.merges},
      {"peak_resident_frames", s.peak_resident_frames},
      {"elapsed_seconds", s.elapsed_seconds},
  };
}

inline nlohmann::json to_json(const MemoryCostReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"frames_ingested", r.frames_ingested},
                    {"resident_token_bytes_sparse", r.sparse_bytes},
                    {"resident_token_bytes_dense_baseline", r.dense_bytes},
                    {"flush_count", r.flush_count}});
  }
  const double reduction = report.amortized_bytes_per_frame_sparse > 0.0
                               ? report.bytes_per_frame_dense / report.amortized_bytes_per_frame_sparse
                               : 0.0;
  return {
      {"header",
       {{"cost_definition", kCostDefinition},
        {"config", config_to_json(report.config)},
        {"frames", report.frames},
        {"checkpoint_every", report.checkpoint_every},
        {"scenes",
         {{"scene_count", report.scenes.scene_count},
          {"frames_per_scene", report.scenes.frames_per_scene},
          {"noise_sigma", report.scenes.noise_sigma},
          {"seed", report.scenes.seed}}}}},
      {"rows", std::move(rows)},
      {"summary",
       {{"amortized_bytes_per_frame_sparse", report.amortized_bytes_per_frame_sparse},
        {"bytes_per_frame_dense", report.bytes_per_frame_dense},
        {"reduction_factor", reduction}}},
      {"stats", stats_to_json(report.stats)},
  };
}

}  // namespace tokmem
