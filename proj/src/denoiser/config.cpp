// SPDX-License-Identifier: Apache-2.0
#include "frr/denoiser/config.hpp"

#include <string>

#include "frr/core/error.hpp"

namespace frr::denoiser {

void DenoiserConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("denoiser config: " + msg); };
  if (working_resolution <= 0) fail("working_resolution must be positive");
  if (base_channels <= 0) fail("base_channels must be positive");
  if (channel_multipliers.empty()) fail("channel_multipliers must not be empty");
  if (norm_groups <= 0) fail("norm_groups must be positive");
  for (auto m : channel_multipliers) {
    if (m <= 0) fail("channel multipliers must be positive");
    if ((base_channels * m) % norm_groups != 0) {
      fail("channels " + std::to_string(base_channels * m) + " not divisible by norm_groups " +
           std::to_string(norm_groups));
    }
  }
  if (time_embed_dim <= 0 || time_embed_dim % 2 != 0) fail("time_embed_dim must be positive and even");
  if (res_blocks_per_level <= 0) fail("res_blocks_per_level must be positive");
  const std::int64_t factor = std::int64_t{1} << (levels() - 1);
  if (working_resolution % factor != 0) {
    fail("working_resolution " + std::to_string(working_resolution) + " not divisible by 2^(levels-1) = " +
         std::to_string(factor));
  }
  for (auto level : attention_levels) {
    if (level < 0 || level >= levels()) fail("attention level " + std::to_string(level) + " out of range");
  }
}

DenoiserConfig DenoiserConfig::desk() { return DenoiserConfig{}; }

DenoiserConfig DenoiserConfig::paper_scale() {
  DenoiserConfig c;
  c.working_resolution = 128;
  c.base_channels = 64;
  c.channel_multipliers = {1, 1, 2, 2, 4};
  c.time_embed_dim = 256;
  c.attention_levels = {3, 4};
  c.res_blocks_per_level = 2;
  c.norm_groups = 32;
  return c;
}

void to_json(nlohmann::json& j, const DenoiserConfig& c) {
  j = {{"working_resolution", c.working_resolution},
       {"base_channels", c.base_channels},
       {"channel_multipliers", c.channel_multipliers},
       {"time_embed_dim", c.time_embed_dim},
       {"attention_levels", c.attention_levels},
       {"res_blocks_per_level", c.res_blocks_per_level},
       {"norm_groups", c.norm_groups}};
}

void from_json(const nlohmann::json& j, DenoiserConfig& c) {
  const DenoiserConfig d;
  c.working_resolution = j.value("working_resolution", d.working_resolution);
  c.base_channels = j.value("base_channels", d.base_channels);
  c.channel_multipliers = j.value("channel_multipliers", d.channel_multipliers);
  c.time_embed_dim = j.value("time_embed_dim", d.time_embed_dim);
  c.attention_levels = j.value("attention_levels", d.attention_levels);
  c.res_blocks_per_level = j.value("res_blocks_per_level", d.res_blocks_per_level);
  c.norm_groups = j.value("norm_groups", d.norm_groups);
}

}  // namespace frr::denoiser
