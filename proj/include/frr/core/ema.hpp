// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "frr/core/archive.hpp"

namespace frr {

/// Exponential moving average of a module's parameters:
/// shadow <- decay * shadow + (1 - decay) * param after every update().
class ParameterEma {
 public:
  ParameterEma(const torch::OrderedDict<std::string, torch::Tensor>& params, double decay);

  double decay() const { return decay_; }
  void update(const torch::OrderedDict<std::string, torch::Tensor>& params);
  /// Copies the averaged weights into `params` (names must match).
  void copy_to(const torch::OrderedDict<std::string, torch::Tensor>& params) const;

  /// Stored under "ema/<param>" with the decay in meta["ema_decay"].
  void append_to(TensorArchive& archive) const;
  /// Throws CheckpointError on missing or misshapen entries.
  void restore_from(const TensorArchive& archive);

  const std::vector<std::pair<std::string, torch::Tensor>>& shadow() const { return shadow_; }

 private:
  double decay_;
  std::vector<std::pair<std::string, torch::Tensor>> shadow_;
};

/// True when the archive holds averaged weights.
bool archive_has_ema(const TensorArchive& archive);

inline constexpr const char* kEmaPrefix = "ema/";

}  // namespace frr
