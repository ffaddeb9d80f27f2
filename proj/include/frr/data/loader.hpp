// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "frr/data/manifest.hpp"

namespace frr::data {

/// One training/evaluation example in model space, each 3 x R x R.
struct LoadedSample {
  std::string id;
  torch::Tensor x0_lr;  // raw at the working resolution
  torch::Tensor y0_lr;  // retouched at the working resolution
  torch::Tensor x0_hr;  // raw at the high resolution
};

/// Reads one image of a manifest entry, verifying its SHA-256. Throws
/// ChecksumError naming the file on mismatch.
torch::Tensor read_verified(const DatasetManifest& manifest, const std::string& relative_path,
                            const std::string& expected_sha256);

/// Resizes a file-space image to side x side (bicubic, antialiased when
/// shrinking), quantizes to 8 bits and maps to model space.
torch::Tensor prepare_image(const torch::Tensor& file_space, std::int64_t side);

/// Single-consumer stream over one split. Files are read and their checksums
/// verified only when the sample is produced. The visiting order is a
/// seeded permutation of the split's manifest order (or the manifest order
/// itself when shuffle is false), identical for identical seeds.
class SplitStream {
 public:
  SplitStream(const DatasetManifest& manifest, Split split, std::int64_t working_resolution,
              std::int64_t hr_resolution, std::uint64_t seed, bool shuffle = true);

  std::optional<LoadedSample> next();
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& order() const { return order_ids_; }
  /// Restarts from the beginning with a new permutation seed.
  void reset(std::uint64_t seed);

 private:
  const DatasetManifest* manifest_;
  std::vector<const ManifestEntry*> entries_;
  std::vector<std::size_t> order_;
  std::vector<std::string> order_ids_;
  std::int64_t working_, hr_;
  bool shuffle_;
  std::size_t pos_ = 0;
};

/// Streams a split and loads every sample into memory.
std::vector<LoadedSample> load_split(const DatasetManifest& manifest, Split split, std::int64_t working_resolution,
                                     std::int64_t hr_resolution, std::uint64_t seed = 0, bool shuffle = false);

}  // namespace frr::data
