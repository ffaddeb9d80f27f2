// SPDX-License-Identifier: Apache-2.0
//
// U-shaped residual network eps_theta(x_t, t, y0). The retouched condition y0
// is concatenated onto x_t along channels (6-channel input); the step enters
// through a sinusoidal embedding that every residual block projects and adds.
#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "frr/denoiser/config.hpp"

namespace frr::denoiser {

/// Sinusoidal embedding of integer steps, shape N x dim ([sin | cos] halves).
torch::Tensor timestep_embedding(const torch::Tensor& t, std::int64_t dim, torch::ScalarType dtype);

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(std::int64_t in_ch, std::int64_t out_ch, std::int64_t temb_dim, std::int64_t groups);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb);

 private:
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::Linear temb_proj_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Single-head spatial self-attention with a residual connection.
class SelfAttentionImpl : public torch::nn::Module {
 public:
  SelfAttentionImpl(std::int64_t channels, std::int64_t groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::GroupNorm norm_{nullptr};
  torch::nn::Conv2d qkv_{nullptr}, proj_{nullptr};
};
TORCH_MODULE(SelfAttention);

class ConditionalUNetImpl : public torch::nn::Module {
 public:
  explicit ConditionalUNetImpl(DenoiserConfig config);

  /// x_t, y0: N x 3 x R x R with R = working_resolution; t: N int64 steps.
  torch::Tensor forward(const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y0);

  /// Deterministic re-initialization from `seed`. Output convolution weights
  /// and bias are zero, so a fresh network predicts all-zero noise.
  void initialize(std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }

 private:
  struct Level {
    std::vector<ResBlock> blocks;
    std::vector<SelfAttention> attention;  // empty or one per block
    torch::nn::Conv2d resample{nullptr};   // stride-2 down or post-upsample conv
  };

  DenoiserConfig config_;
  torch::nn::Linear temb_fc1_{nullptr}, temb_fc2_{nullptr};
  torch::nn::Conv2d in_conv_{nullptr};
  std::vector<Level> down_, up_;
  ResBlock mid1_{nullptr}, mid2_{nullptr};
  SelfAttention mid_attn_{nullptr};
  torch::nn::GroupNorm out_norm_{nullptr};
  torch::nn::Conv2d out_conv_{nullptr};
};
TORCH_MODULE(ConditionalUNet);

}  // namespace frr::denoiser
