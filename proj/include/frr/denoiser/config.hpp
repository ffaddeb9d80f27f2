// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include <json.hpp>

namespace frr::denoiser {

/// Shape of the conditional noise predictor. Parameter shapes are a pure
/// function of this struct.
struct DenoiserConfig {
  std::int64_t working_resolution = 32;
  std::int64_t base_channels = 32;
  /// Channel multiplier per resolution level; level i runs at
  /// working_resolution / 2^i.
  std::vector<std::int64_t> channel_multipliers{1, 2, 2};
  std::int64_t time_embed_dim = 128;
  /// Levels (indices into channel_multipliers) that get a self-attention block.
  std::set<std::int64_t> attention_levels{2};
  std::int64_t res_blocks_per_level = 1;
  std::int64_t norm_groups = 8;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  std::int64_t levels() const { return static_cast<std::int64_t>(channel_multipliers.size()); }

  bool operator==(const DenoiserConfig&) const = default;

  /// 32 x 32, base 32, multipliers [1, 2, 2], attention at the coarsest level.
  static DenoiserConfig desk();
  /// 128 x 128 profile; valid but not exercised by the test-suite beyond construction.
  static DenoiserConfig paper_scale();
};

void to_json(nlohmann::json& j, const DenoiserConfig& c);
void from_json(const nlohmann::json& j, DenoiserConfig& c);

}  // namespace frr::denoiser
