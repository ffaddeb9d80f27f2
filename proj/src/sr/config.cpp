// SPDX-License-Identifier: Apache-2.0
#include "frr/sr/config.hpp"

#include <algorithm>

#include "frr/core/error.hpp"

namespace frr::sr {

void SRConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("sr config: " + msg); };
  if (upscale < 2 || upscale > 4) fail("upscale must be 2, 3 or 4");
  if (embed_dim <= 0) fail("embed_dim must be positive");
  if (num_heads <= 0 || embed_dim % num_heads != 0) {
    fail("embed_dim " + std::to_string(embed_dim) + " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (num_hab_per_group <= 0) fail("num_hab_per_group must be positive");
  if (num_groups <= 0) fail("num_groups must be positive");
  if (window_size <= 0) fail("window_size must be positive");
  if (!(ca_weight >= 0.0)) fail("ca_weight must be non-negative");
  if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0)) fail("overlap_ratio must lie in [0, 1)");
  if ((overlap_window() - window_size) % 2 != 0) {
    fail("overlap window " + std::to_string(overlap_window()) + " must exceed window_size by an even amount");
  }
  if (!(mlp_ratio > 0.0)) fail("mlp_ratio must be positive");
  if (ca_compress <= 0 || embed_dim / ca_compress <= 0) fail("ca_compress must be in [1, embed_dim]");
  if (ca_squeeze <= 0 || embed_dim / ca_squeeze <= 0) fail("ca_squeeze must be in [1, embed_dim]");
  if (loss != "l1" && loss != "l2") fail("loss must be 'l1' or 'l2', got '" + loss + "'");
}

std::int64_t SRConfig::overlap_window() const {
  return window_size + static_cast<std::int64_t>(overlap_ratio * static_cast<double>(window_size));
}

SRConfig SRConfig::desk() { return SRConfig{}; }

SRConfig SRConfig::paper_scale() {
  SRConfig c;
  c.embed_dim = 180;
  c.num_hab_per_group = 6;
  c.num_groups = 12;
  c.window_size = 16;
  c.num_heads = 6;
  c.mlp_ratio = 2.0;
  c.ca_squeeze = 30;
  return c;
}

void to_json(nlohmann::json& j, const SRConfig& c) {
  j = {{"upscale", c.upscale},          {"embed_dim", c.embed_dim},
       {"num_hab_per_group", c.num_hab_per_group}, {"num_groups", c.num_groups},
       {"window_size", c.window_size},  {"ca_weight", c.ca_weight},
       {"overlap_ratio", c.overlap_ratio}, {"num_heads", c.num_heads},
       {"mlp_ratio", c.mlp_ratio},      {"ca_compress", c.ca_compress},
       {"ca_squeeze", c.ca_squeeze},    {"loss", c.loss}};
}

void from_json(const nlohmann::json& j, SRConfig& c) {
  const SRConfig d;
  c.upscale = j.value("upscale", d.upscale);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.num_hab_per_group = j.value("num_hab_per_group", d.num_hab_per_group);
  c.num_groups = j.value("num_groups", d.num_groups);
  c.window_size = j.value("window_size", d.window_size);
  c.ca_weight = j.value("ca_weight", d.ca_weight);
  c.overlap_ratio = j.value("overlap_ratio", d.overlap_ratio);
  c.num_heads = j.value("num_heads", d.num_heads);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.ca_compress = j.value("ca_compress", d.ca_compress);
  c.ca_squeeze = j.value("ca_squeeze", d.ca_squeeze);
  c.loss = j.value("loss", d.loss);
}

}  // namespace frr::sr
