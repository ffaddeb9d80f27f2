// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <torch/torch.h>

#include "frr/core/optim_state.hpp"
#include "frr/denoiser/config.hpp"
#include "frr/denoiser/unet.hpp"
#include "frr/diffusion/process.hpp"
#include "frr/diffusion/schedule.hpp"

namespace frr::denoiser {

inline constexpr int kCheckpointFormatVersion = 1;

/// Parameters of the noise predictor together with everything needed to use
/// them: the config that fixes their shapes, the schedule they were trained
/// against and the training step. Copies are deep.
class DenoiserCheckpoint {
 public:
  DenoiserCheckpoint(DenoiserConfig config, diffusion::ScheduleSpec schedule);
  DenoiserCheckpoint(const DenoiserCheckpoint& other);
  DenoiserCheckpoint& operator=(const DenoiserCheckpoint& other);
  DenoiserCheckpoint(DenoiserCheckpoint&&) noexcept = default;
  DenoiserCheckpoint& operator=(DenoiserCheckpoint&&) noexcept = default;

  const DenoiserConfig& config() const { return config_; }
  const diffusion::ScheduleSpec& schedule() const { return schedule_; }
  std::int64_t step = 0;

  ConditionalUNet& model() { return model_; }
  const ConditionalUNet& model() const { return model_; }

  /// Adapter for the sampler and train_step.
  diffusion::EpsPredictor predictor() const;

  std::int64_t parameter_count() const;

 private:
  DenoiserConfig config_;
  diffusion::ScheduleSpec schedule_;
  ConditionalUNet model_;
};

/// Deterministic initialization; fresh checkpoints predict all-zero noise.
DenoiserCheckpoint init_denoiser(const DenoiserConfig& config, std::uint64_t seed,
                                 const diffusion::ScheduleSpec& schedule = {});

/// eps_theta(x_t, t, y0). Accepts single images (3 x R x R) or batches.
torch::Tensor predict_eps(const DenoiserCheckpoint& ckpt, const torch::Tensor& x_t, std::int64_t t,
                          const torch::Tensor& y0);
torch::Tensor predict_eps(const DenoiserCheckpoint& ckpt, const torch::Tensor& x_t, const torch::Tensor& t,
                          const torch::Tensor& y0);

/// Training state (Adam moments, averaged weights, loss history) is stored
/// alongside the parameters so that resumed training continues exactly where
/// it stopped.
void save_checkpoint(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt,
                     const TrainingSnapshot& state = {});
/// Validates format version, component tag and every parameter shape against
/// the stored config before anything is copied into the network.
DenoiserCheckpoint load_checkpoint(const std::filesystem::path& path,
                                   WeightSelection weights = WeightSelection::trained);
/// Restores the training state saved with `path` into objects built over
/// `ckpt`'s parameters.
void load_training_state(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt,
                         const TrainingRestore& state);

}  // namespace frr::denoiser
