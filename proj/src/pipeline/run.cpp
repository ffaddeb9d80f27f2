// SPDX-License-Identifier: Apache-2.0
#include "frr/pipeline/run.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <vector>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/data/builder.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

void check_against_recorded(const RunConfig& config, const fs::path& recorded_path) {
  const auto bytes = read_bytes(recorded_path);
  const auto recorded = nlohmann::json::parse(bytes.begin(), bytes.end());
  const nlohmann::json current = config;
  const auto recorded_schedule = recorded.at("schedule").get<diffusion::ScheduleSpec>();
  if (!(recorded_schedule == config.schedule)) {
    throw CheckpointError("schedule fingerprint mismatch for run '" + config.run_id + "': the run was created with " +
                          recorded_schedule.fingerprint() + " but the config has " + config.schedule.fingerprint());
  }
  std::vector<std::string> differing;
  for (const auto& [key, value] : current.items()) {
    if (!recorded.contains(key) || recorded.at(key) != value) differing.push_back(key);
  }
  for (const auto& [key, value] : recorded.items()) {
    if (!current.contains(key)) differing.push_back(key);
  }
  if (!differing.empty()) {
    std::string names;
    for (const auto& d : differing) names += (names.empty() ? "" : ", ") + d;
    throw ConfigError("run '" + config.run_id + "' already exists with a different config (" + names +
                      "); use a new run_id");
  }
}

}  // namespace

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  localtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03d", buf, static_cast<int>(ms));
  return out;
}

RunContext::RunContext(const RunConfig& config, const std::string& command)
    : config_(config), command_(command), root_(config.artifacts_dir / config.run_id) {
  fs::create_directories(root_ / "logs");
  const auto recorded = root_ / "config.json";
  if (fs::exists(recorded)) {
    check_against_recorded(config_, recorded);
  } else {
    write_text_atomic(recorded, serialize_config(config_));
  }
  previous_logger_ = spdlog::default_logger();
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>((root_ / "logs" / (command + ".log")).string());
  auto logger = std::make_shared<spdlog::logger>("frr", spdlog::sinks_init_list{console, file});
  logger->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
  logger->set_level(previous_logger_ ? previous_logger_->level() : spdlog::level::info);
  logger->flush_on(spdlog::level::info);
  spdlog::set_default_logger(logger);
  spdlog::info("{}: run '{}' in {}", command_, config_.run_id, root_.string());
}

RunContext::~RunContext() {
  spdlog::default_logger()->flush();
  if (previous_logger_) spdlog::set_default_logger(previous_logger_);
}

fs::path RunContext::dir(const std::string& name) const {
  auto d = root_ / name;
  fs::create_directories(d);
  return d;
}

fs::path RunContext::manifest_path() const {
  if (!config_.dataset.manifest.empty()) return config_.dataset.manifest;
  return root_ / "dataset" / data::kManifestFileName;
}

fs::path RunContext::next_numbered_dir(const std::string& name) const {
  const auto parent = dir(name);
  for (int i = 1;; ++i) {
    char label[16];
    std::snprintf(label, sizeof label, "%03d", i);
    const auto candidate = parent / label;
    if (fs::create_directory(candidate)) return candidate;
  }
}

void RunContext::record(nlohmann::json record) const {
  nlohmann::json line = {{"time", timestamp_now()}, {"command", command_}};
  line.update(record);
  std::ofstream out(root_ / "metrics.jsonl", std::ios::app);
  out << line.dump() << "\n";
  if (!out) throw IoError("cannot append to " + (root_ / "metrics.jsonl").string());
}

}  // namespace frr::pipeline
