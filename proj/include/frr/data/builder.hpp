// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "frr/data/api_client.hpp"
#include "frr/data/manifest.hpp"
#include "frr/data/retouch.hpp"

namespace frr::data {

struct BuildOptions {
  std::filesystem::path source_dir;
  std::filesystem::path out_dir;
  RetouchSpec ops = default_retouch_spec();
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  /// "simulator", "api" or "preexisting".
  std::string backend = "simulator";
  /// Required for the api backend.
  std::optional<ApiEndpointConfig> api;
  /// For "preexisting": directory of retouched images whose file stems match
  /// the sources.
  std::filesystem::path retouched_dir;
  /// Square side every source is bicubically resized to; 0 keeps the
  /// native size, which must then be square and shared by all sources.
  std::int64_t resolution = 0;
  /// Worker threads for per-image work.
  int threads = 1;
};

void to_json(nlohmann::json& j, const BuildOptions& o);
void from_json(const nlohmann::json& j, BuildOptions& o);

/// Throws ConfigError for an unknown backend name or missing backend inputs.
void validate_build_options(const BuildOptions& options);

/// Retouches every decodable image in source_dir (sorted by file name) with
/// the chosen backend, writes raw/<id>.png and retouched/<id>.png under
/// out_dir, assigns the split and writes out_dir/manifest.jsonl atomically.
/// Undecodable or wrongly-sized sources are skipped with a warning.
DatasetManifest build_dataset(const BuildOptions& options);

inline constexpr const char* kManifestFileName = "manifest.jsonl";

}  // namespace frr::data
