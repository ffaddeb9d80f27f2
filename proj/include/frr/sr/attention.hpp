// SPDX-License-Identifier: Apache-2.0
//
// Building blocks of the hybrid-attention SR trunk. Blocks take and return
// B x C x H x W feature maps; attention runs channels-last internally.
#pragma once

#include <cstdint>
#include <optional>

#include <torch/torch.h>

namespace frr::sr {

/// [B, H, W, C] -> [B * nW, wh * ww, C], windows in row-major order.
torch::Tensor window_partition(const torch::Tensor& x, std::int64_t wh, std::int64_t ww);
/// Inverse of window_partition for an H x W map.
torch::Tensor window_reverse(const torch::Tensor& windows, std::int64_t wh, std::int64_t ww, std::int64_t h,
                             std::int64_t w);

/// Relative-position table indices for a qh x qw query window attending to a
/// (qh + 2 pad) x (qw + 2 pad) key window centred on it. The table has
/// (window + key_window - 1)^2 rows, where key_window = window + 2 pad is the
/// full-size key window; smaller query windows use a subset of it.
/// Returns int64 [qh * qw, (qh + 2 pad) * (qw + 2 pad)].
torch::Tensor relative_position_index(std::int64_t qh, std::int64_t qw, std::int64_t pad, std::int64_t window,
                                      std::int64_t key_window);

/// Additive mask (0 or -100) that keeps tokens of a cyclically shifted map
/// from attending across the wrap-around seam. Returns [nW, ws^2, ws^2].
torch::Tensor shifted_window_mask(std::int64_t h, std::int64_t w, std::int64_t window, std::int64_t shift);

/// Reflect-pads a [B, H, W, C] map so both sides become multiples of (wh, ww).
torch::Tensor pad_to_multiple(const torch::Tensor& x, std::int64_t wh, std::int64_t ww);

struct MlpImpl : torch::nn::Module {
  MlpImpl(std::int64_t dim, std::int64_t hidden);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(Mlp);

/// Multi-head self-attention inside windows with a learned relative-position bias.
struct WindowAttentionImpl : torch::nn::Module {
  WindowAttentionImpl(std::int64_t dim, std::int64_t window, std::int64_t heads);
  /// windows: [B', qh * qw, C]; mask: optional [nW, N, N] with B' a multiple of nW.
  torch::Tensor forward(const torch::Tensor& windows, std::int64_t qh, std::int64_t qw,
                        const std::optional<torch::Tensor>& mask = std::nullopt);

  std::int64_t dim, window, heads;
  torch::nn::Linear qkv{nullptr}, proj{nullptr};
  torch::Tensor bias_table;  // [(2 window - 1)^2, heads]
};
TORCH_MODULE(WindowAttention);

/// Squeeze-and-excitation style gate over channels.
struct ChannelAttentionImpl : torch::nn::Module {
  ChannelAttentionImpl(std::int64_t dim, std::int64_t squeeze);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d reduce{nullptr}, expand{nullptr};
};
TORCH_MODULE(ChannelAttention);

/// conv 3x3 -> GELU -> conv 3x3 -> channel attention.
struct ChannelAttentionBlockImpl : torch::nn::Module {
  ChannelAttentionBlockImpl(std::int64_t dim, std::int64_t compress, std::int64_t squeeze);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  ChannelAttention gate{nullptr};
};
TORCH_MODULE(ChannelAttentionBlock);

/// Hybrid attention block:
///   n = LN(f); x = f + WMSA(n) + ca_weight * CAB(n); out = x + MLP(LN(x)).
/// Windows are shifted by `shift` when both sides exceed the window; maps no
/// larger than a window are attended densely as a single window.
struct HybridAttentionBlockImpl : torch::nn::Module {
  HybridAttentionBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t window, std::int64_t shift,
                           double mlp_ratio, std::int64_t compress, std::int64_t squeeze);
  torch::Tensor forward(const torch::Tensor& x, double ca_weight);

  std::int64_t window, shift;
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  WindowAttention attn{nullptr};
  ChannelAttentionBlock cab{nullptr};
  Mlp mlp{nullptr};
};
TORCH_MODULE(HybridAttentionBlock);

/// Overlapping cross-attention block: queries from window x window tiles,
/// keys/values from enlarged key_window x key_window tiles around them.
///   x = f + proj(XAttn(LN(f))); out = x + MLP(LN(x)).
struct OverlapCrossAttentionImpl : torch::nn::Module {
  OverlapCrossAttentionImpl(std::int64_t dim, std::int64_t heads, std::int64_t window, std::int64_t key_window,
                            double mlp_ratio);
  torch::Tensor forward(const torch::Tensor& x);

  std::int64_t dim, heads, window, key_window;
  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Linear qkv{nullptr}, proj{nullptr};
  torch::Tensor bias_table;  // [(window + key_window - 1)^2, heads]
  Mlp mlp{nullptr};
};
TORCH_MODULE(OverlapCrossAttention);

}  // namespace frr::sr
