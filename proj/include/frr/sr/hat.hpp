// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include <torch/torch.h>

#include "frr/core/optim_state.hpp"
#include "frr/sr/attention.hpp"
#include "frr/sr/config.hpp"

namespace frr::sr {

/// N hybrid attention blocks (shift on odd blocks), one overlapping
/// cross-attention block and a 3x3 convolution, wrapped in a residual.
struct ResidualHybridGroupImpl : torch::nn::Module {
  explicit ResidualHybridGroupImpl(const SRConfig& config);
  torch::Tensor forward(const torch::Tensor& x, double ca_weight);

  torch::nn::ModuleList blocks{nullptr};
  OverlapCrossAttention ocab{nullptr};
  torch::nn::Conv2d conv{nullptr};
  HybridAttentionBlock block(std::size_t i) const;
};
TORCH_MODULE(ResidualHybridGroup);

/// shallow conv -> M residual groups -> LayerNorm -> conv (+ shallow)
/// -> conv to 3 r^2 channels -> pixel shuffle.
struct HybridAttentionSRImpl : torch::nn::Module {
  explicit HybridAttentionSRImpl(const SRConfig& config);

  torch::Tensor shallow(const torch::Tensor& x);
  /// Groups, norm and the after-body convolution; excludes the shallow skip.
  torch::Tensor body(const torch::Tensor& f0);
  /// body(f0) + f0.
  torch::Tensor trunk(const torch::Tensor& f0);
  torch::Tensor reconstruct(const torch::Tensor& deep, const torch::Tensor& f0);
  /// Unclamped end-to-end output, used for training.
  torch::Tensor forward(const torch::Tensor& x);

  /// Deterministic initialization: linear weights and position tables
  /// N(0, 0.02^2) clipped at 2 sigma, convolutions U(+-1/sqrt(fan_in)),
  /// biases 0, norm gains 1.
  void initialize(std::uint64_t seed);

  SRConfig config;
  torch::nn::Conv2d conv_first{nullptr};
  torch::nn::ModuleList groups{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Conv2d conv_after_body{nullptr}, conv_last{nullptr};
  ResidualHybridGroup group(std::size_t i) const;
};
TORCH_MODULE(HybridAttentionSR);

/// Applies the initialization of HybridAttentionSRImpl::initialize to any
/// module tree built from the blocks in attention.hpp.
void initialize_sr_parameters(torch::nn::Module& module, std::uint64_t seed);

enum class FeatureStage { shallow, post_hab, post_ocab, deep, reconstructed };
std::string_view to_string(FeatureStage stage);

/// A B x C x h x w activation tagged with the pipeline stage that produced it.
struct FeatureMap {
  torch::Tensor tensor;
  FeatureStage stage;
};

/// Stage-checked wrappers around the network pieces. Each throws
/// ContractViolation when handed a feature map from the wrong stage.
FeatureMap shallow_features(HybridAttentionSR& net, const torch::Tensor& x);
FeatureMap hab_forward(HybridAttentionBlock& block, const FeatureMap& f, double ca_weight);
FeatureMap ocab_forward(OverlapCrossAttention& block, const FeatureMap& f);
FeatureMap rha_group(ResidualHybridGroup& group, const FeatureMap& f, double ca_weight);
/// All groups, norm and after-body convolution applied to the shallow features.
FeatureMap deep_features(HybridAttentionSR& net, const FeatureMap& shallow);
/// PixelShuffle(conv_last(deep + shallow)).
torch::Tensor reconstruct(HybridAttentionSR& net, const FeatureMap& deep, const FeatureMap& shallow);

/// End-to-end upscaling, clamped to the model range [-1, 1]. Accepts
/// 3 x h x w or N x 3 x h x w.
torch::Tensor sr_forward(HybridAttentionSR& net, const torch::Tensor& x_lr);

inline constexpr int kSRCheckpointFormatVersion = 1;

/// Value-semantic SR parameters plus config and training step.
class SRCheckpoint {
 public:
  explicit SRCheckpoint(SRConfig config);
  SRCheckpoint(const SRCheckpoint& other);
  SRCheckpoint& operator=(const SRCheckpoint& other);
  SRCheckpoint(SRCheckpoint&&) noexcept = default;
  SRCheckpoint& operator=(SRCheckpoint&&) noexcept = default;

  const SRConfig& config() const { return config_; }
  HybridAttentionSR& model() { return model_; }
  const HybridAttentionSR& model() const { return model_; }
  std::int64_t parameter_count() const;
  std::int64_t step = 0;

 private:
  SRConfig config_;
  HybridAttentionSR model_;
};

SRCheckpoint init_sr(const SRConfig& config, std::uint64_t seed);
void save_sr_checkpoint(const std::filesystem::path& path, const SRCheckpoint& ckpt,
                        const TrainingSnapshot& state = {});
SRCheckpoint load_sr_checkpoint(const std::filesystem::path& path,
                                WeightSelection weights = WeightSelection::trained);
void load_sr_training_state(const std::filesystem::path& path, const SRCheckpoint& ckpt,
                            const TrainingRestore& state);

}  // namespace frr::sr
