// SPDX-License-Identifier: Apache-2.0
//
// Named registry of super-resolution back-ends, so the second stage can be
// swapped by configuration. "hat" (the hybrid-attention network) and
// "bicubic" (parameter-free interpolation) are registered at start-up.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "frr/sr/hat.hpp"

namespace frr::sr {

class SRBackend {
 public:
  virtual ~SRBackend() = default;
  virtual std::string name() const = 0;
  virtual std::int64_t upscale() const = 0;
  /// N x 3 x h x w (or 3 x h x w) model-space input -> upscaled output in [-1, 1].
  virtual torch::Tensor upscale_image(const torch::Tensor& x_lr) const = 0;
};

/// Either a trained checkpoint or nothing, in which case learned back-ends
/// initialize from `config` and `seed`.
struct BackendArgs {
  SRConfig config;
  std::optional<SRCheckpoint> checkpoint;
  std::uint64_t seed = 0;
};

using BackendFactory = std::function<std::unique_ptr<SRBackend>(const BackendArgs&)>;

/// Registration overwrites an existing entry of the same name.
void register_sr_backend(const std::string& name, BackendFactory factory);
std::vector<std::string> registered_sr_backends();
bool has_sr_backend(const std::string& name);
/// Throws ConfigError listing the registered names when `name` is unknown.
std::unique_ptr<SRBackend> make_sr_backend(const std::string& name, const BackendArgs& args);
/// Throws ConfigError listing the registered names when `name` is unknown.
void require_sr_backend(const std::string& name);

}  // namespace frr::sr
