// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace frr::sr {

/// Shape and hyper-parameters of the hybrid-attention super-resolution network.
struct SRConfig {
  std::int64_t upscale = 4;
  std::int64_t embed_dim = 32;
  std::int64_t num_hab_per_group = 2;
  std::int64_t num_groups = 2;
  std::int64_t window_size = 8;
  double ca_weight = 0.01;
  double overlap_ratio = 0.5;
  std::int64_t num_heads = 4;
  double mlp_ratio = 2.0;
  /// Channel reduction inside the convolutional branch of each hybrid block.
  std::int64_t ca_compress = 3;
  /// Squeeze factor of the channel-attention gate.
  std::int64_t ca_squeeze = 16;
  /// "l1" or "l2".
  std::string loss = "l1";

  void validate() const;
  /// Key/value window side of the overlapping cross-attention.
  std::int64_t overlap_window() const;
  bool operator==(const SRConfig&) const = default;

  static SRConfig desk();
  /// HAT-B-sized trunk.
  static SRConfig paper_scale();
};

void to_json(nlohmann::json& j, const SRConfig& c);
void from_json(const nlohmann::json& j, SRConfig& c);

}  // namespace frr::sr
