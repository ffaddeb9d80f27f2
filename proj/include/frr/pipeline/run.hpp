// SPDX-License-Identifier: Apache-2.0
//
// Artifact layout of one run, rooted at <artifacts_dir>/<run_id>:
//
//   config.json          effective config of the first command, never rewritten
//   logs/<command>.log   timestamped text log
//   metrics.jsonl        one structured record per event
//   dataset/             default build-dataset output
//   stage1/, stage2/     ckpt_<step>.frr checkpoints and loss.tsv
//   infer/<NNN>/         stage1/<id>.png, final/<id>.png, summary.json
//   eval/<NNN>/          candidate and baseline reports, density plot
//   ablate/<axis>/       one nested run per axis value plus the table
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "frr/pipeline/config.hpp"

namespace frr::pipeline {

class RunContext {
 public:
  /// Creates the run directory (or reopens it), refuses a config that differs
  /// from the run's recorded one and routes logging to logs/<command>.log
  /// as well as stderr. A differing schedule is reported as a
  /// CheckpointError naming both fingerprints; any other difference as a
  /// ConfigError naming the sections.
  RunContext(const RunConfig& config, const std::string& command);
  ~RunContext();
  RunContext(const RunContext&) = delete;
  RunContext& operator=(const RunContext&) = delete;

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dir(const std::string& name) const;
  /// Configured manifest, or the run's own dataset/manifest.jsonl.
  std::filesystem::path manifest_path() const;
  /// Creates and returns the next unused numbered directory under `name`
  /// (001, 002, ...).
  std::filesystem::path next_numbered_dir(const std::string& name) const;

  /// Appends {"time", "command", ...record} to metrics.jsonl.
  void record(nlohmann::json record) const;

 private:
  RunConfig config_;
  std::string command_;
  std::filesystem::path root_;
  std::shared_ptr<spdlog::logger> previous_logger_;
};

/// Sub-seed streams of the run seed; stage 2 also seeds the SR weights of
/// an untrained back-end.
inline constexpr std::uint64_t kStage1SeedStream = 1;
inline constexpr std::uint64_t kStage2SeedStream = 2;

/// Local time with milliseconds, ISO 8601.
std::string timestamp_now();

}  // namespace frr::pipeline
