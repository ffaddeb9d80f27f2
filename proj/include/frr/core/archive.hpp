// SPDX-License-Identifier: Apache-2.0
//
// Single-file tensor archive shared by the denoiser and SR checkpoints.
//
// Layout (little endian):
//   8 bytes   magic "FRRARCH\0"
//   u32       archive version (kArchiveVersion)
//   u64       manifest length in bytes
//   ...       manifest, UTF-8 JSON
//   ...       tensor payloads, back to back, in manifest order
//
// The manifest carries caller metadata under "meta" and a "tensors" table of
// {name, dtype, shape, offset, nbytes} where offset is relative to the start
// of the payload section.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace frr {

inline constexpr std::uint32_t kArchiveVersion = 1;

struct TensorArchive {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  /// Returns the tensor stored under `name` or throws CheckpointError.
  const torch::Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

/// Writes atomically (temp file + rename).
void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

}  // namespace frr
