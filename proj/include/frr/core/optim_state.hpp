// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include <vector>

#include "frr/core/archive.hpp"
#include "frr/core/ema.hpp"

namespace frr {

/// Stores per-parameter Adam moments under "adam/<param>/{exp_avg,exp_avg_sq}"
/// and the step counts in archive meta["adam_steps"].
void append_adam_state(TensorArchive& archive, const torch::optim::Adam& optimizer,
                       const torch::OrderedDict<std::string, torch::Tensor>& params);

/// Inverse of append_adam_state. Parameters without stored moments are left
/// untouched (fresh optimizer state).
void restore_adam_state(const TensorArchive& archive, torch::optim::Adam& optimizer,
                        const torch::OrderedDict<std::string, torch::Tensor>& params);

/// Copies archive tensors named `prefix + name` into `params`, validating
/// every shape first. Throws CheckpointError on any missing or misshapen entry.
void load_parameters(const TensorArchive& archive, const std::string& prefix,
                     const torch::OrderedDict<std::string, torch::Tensor>& params);

/// Optional training-side state saved next to a model's parameters. Null
/// members are skipped.
struct TrainingSnapshot {
  const torch::optim::Adam* optimizer = nullptr;
  const ParameterEma* ema = nullptr;
  const std::vector<double>* loss_history = nullptr;
};

/// Restore targets matching TrainingSnapshot. Null members are skipped; a
/// requested EMA or loss history absent from the archive is an error.
struct TrainingRestore {
  torch::optim::Adam* optimizer = nullptr;
  ParameterEma* ema = nullptr;
  std::vector<double>* loss_history = nullptr;
};

void append_training_state(TensorArchive& archive, const TrainingSnapshot& state,
                           const torch::OrderedDict<std::string, torch::Tensor>& params);
void restore_training_state(const TensorArchive& archive, const TrainingRestore& state,
                            const torch::OrderedDict<std::string, torch::Tensor>& params);

/// Which weights a loader installs into the network.
enum class WeightSelection {
  trained,
  /// The exponential moving average when the archive has one, else trained.
  averaged_if_available,
};

/// load_parameters from "param/" or, when selected and present, "ema/".
void load_selected_weights(const TensorArchive& archive, WeightSelection which,
                           const torch::OrderedDict<std::string, torch::Tensor>& params);

inline constexpr const char* kParamPrefix = "param/";

}  // namespace frr
