// SPDX-License-Identifier: Apache-2.0
//
// Dataset manifest: a JSON Lines file. Line 1 is a header object carrying
// "format": "frr-dataset-manifest" and "format_version"; every following line
// is one entry. Image paths are relative to the manifest's directory.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "frr/data/retouch.hpp"

namespace frr::data {

inline constexpr int kManifestFormatVersion = 1;

enum class Split { train, test };
std::string_view to_string(Split s);
/// Throws InvalidArgument for anything but "train" / "test".
Split parse_split(std::string_view name);

/// Where a retouched image came from.
struct Provenance {
  std::string kind;  // "simulator", "api" or "preexisting"
  /// Endpoint URL for "api", source path for "preexisting", empty otherwise.
  std::string source;
  std::uint64_t seed = 0;  // simulator seed
  int attempts = 0;        // HTTP requests made (api)
  std::vector<int> statuses;  // HTTP status per attempt, 0 = no response (api)
  bool operator==(const Provenance&) const = default;
};

struct ManifestEntry {
  std::string id;
  std::string raw_path;
  std::string retouched_path;
  std::string raw_sha256;
  std::string retouched_sha256;
  RetouchSpec ops;
  Provenance provenance;
  Split split = Split::train;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::int64_t source_resolution = 0;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  std::vector<ManifestEntry> entries;
  /// Directory the relative paths resolve against; not serialized.
  std::filesystem::path root;

  std::vector<const ManifestEntry*> split(Split s) const;
  std::size_t count(Split s) const;
  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
};

/// Split labels for n items: a seeded Fisher-Yates permutation whose first
/// round(ratio * n) positions are train. Throws InvalidArgument unless
/// 0 < ratio < 1.
std::vector<Split> assign_split(std::size_t n, double ratio, std::uint64_t seed);

std::string serialize_manifest(const DatasetManifest& manifest);
/// `root` becomes the manifest's root directory.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root);
/// Atomic write (temp file + rename).
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Parses and checks that every referenced file exists. Checksums are
/// verified when images are read (see loader.hpp).
DatasetManifest load_manifest(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

}  // namespace frr::data
