// SPDX-License-Identifier: Apache-2.0
#include "frr/denoiser/unet.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "frr/core/error.hpp"
#include "frr/core/rng.hpp"

namespace frr::denoiser {

namespace F = torch::nn::functional;

namespace {

std::int64_t group_count(std::int64_t groups, std::int64_t channels) { return std::gcd(groups, channels); }

torch::nn::Conv2d conv3x3(std::int64_t in, std::int64_t out, std::int64_t stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::nn::Conv2d conv1x1(std::int64_t in, std::int64_t out) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1));
}

}  // namespace

torch::Tensor timestep_embedding(const torch::Tensor& t, std::int64_t dim, torch::ScalarType dtype) {
  const auto half = dim / 2;
  auto freqs = torch::exp(-std::log(10000.0) * torch::arange(half, torch::kFloat64) / static_cast<double>(half));
  auto args = t.to(torch::kFloat64).unsqueeze(1) * freqs.unsqueeze(0);
  return torch::cat({torch::sin(args), torch::cos(args)}, 1).to(dtype);
}

ResBlockImpl::ResBlockImpl(std::int64_t in_ch, std::int64_t out_ch, std::int64_t temb_dim, std::int64_t groups) {
  norm1_ = register_module("norm1", torch::nn::GroupNorm(group_count(groups, in_ch), in_ch));
  conv1_ = register_module("conv1", conv3x3(in_ch, out_ch));
  temb_proj_ = register_module("temb_proj", torch::nn::Linear(temb_dim, out_ch));
  norm2_ = register_module("norm2", torch::nn::GroupNorm(group_count(groups, out_ch), out_ch));
  conv2_ = register_module("conv2", conv3x3(out_ch, out_ch));
  if (in_ch != out_ch) skip_ = register_module("skip", conv1x1(in_ch, out_ch));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb) {
  auto h = conv1_(F::silu(norm1_(x)));
  h = h + temb_proj_(F::silu(temb)).unsqueeze(-1).unsqueeze(-1);
  h = conv2_(F::silu(norm2_(h)));
  return (skip_ ? skip_(x) : x) + h;
}

SelfAttentionImpl::SelfAttentionImpl(std::int64_t channels, std::int64_t groups) {
  norm_ = register_module("norm", torch::nn::GroupNorm(group_count(groups, channels), channels));
  qkv_ = register_module("qkv", conv1x1(channels, 3 * channels));
  proj_ = register_module("proj", conv1x1(channels, channels));
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& x) {
  const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  auto qkv = qkv_(norm_(x)).reshape({n, 3, c, h * w});
  auto q = qkv.select(1, 0).transpose(1, 2);  // n, hw, c
  auto k = qkv.select(1, 1);                  // n, c, hw
  auto v = qkv.select(1, 2).transpose(1, 2);  // n, hw, c
  auto attn = torch::softmax(torch::bmm(q, k) / std::sqrt(static_cast<double>(c)), -1);
  auto out = torch::bmm(attn, v).transpose(1, 2).reshape({n, c, h, w});
  return x + proj_(out);
}

ConditionalUNetImpl::ConditionalUNetImpl(DenoiserConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& cfg = config_;
  const auto temb = cfg.time_embed_dim;
  const auto groups = cfg.norm_groups;
  const auto levels = cfg.levels();

  temb_fc1_ = register_module("temb_fc1", torch::nn::Linear(temb, temb));
  temb_fc2_ = register_module("temb_fc2", torch::nn::Linear(temb, temb));
  in_conv_ = register_module("in_conv", conv3x3(6, cfg.base_channels));

  std::vector<std::int64_t> skip_channels{cfg.base_channels};
  std::int64_t ch = cfg.base_channels;
  for (std::int64_t i = 0; i < levels; ++i) {
    Level level;
    const auto out_ch = cfg.base_channels * cfg.channel_multipliers[static_cast<std::size_t>(i)];
    const bool attn = cfg.attention_levels.contains(i);
    for (std::int64_t b = 0; b < cfg.res_blocks_per_level; ++b) {
      const auto prefix = "down" + std::to_string(i) + "_res" + std::to_string(b);
      level.blocks.push_back(register_module(prefix, ResBlock(ch, out_ch, temb, groups)));
      ch = out_ch;
      if (attn) {
        level.attention.push_back(
            register_module("down" + std::to_string(i) + "_attn" + std::to_string(b), SelfAttention(ch, groups)));
      }
      skip_channels.push_back(ch);
    }
    if (i + 1 < levels) {
      level.resample = register_module("down" + std::to_string(i) + "_downsample", conv3x3(ch, ch, 2));
      skip_channels.push_back(ch);
    }
    down_.push_back(std::move(level));
  }

  mid1_ = register_module("mid_res1", ResBlock(ch, ch, temb, groups));
  mid_attn_ = register_module("mid_attn", SelfAttention(ch, groups));
  mid2_ = register_module("mid_res2", ResBlock(ch, ch, temb, groups));

  for (std::int64_t i = levels - 1; i >= 0; --i) {
    Level level;
    const auto out_ch = cfg.base_channels * cfg.channel_multipliers[static_cast<std::size_t>(i)];
    const bool attn = cfg.attention_levels.contains(i);
    for (std::int64_t b = 0; b <= cfg.res_blocks_per_level; ++b) {
      const auto skip = skip_channels.back();
      skip_channels.pop_back();
      const auto prefix = "up" + std::to_string(i) + "_res" + std::to_string(b);
      level.blocks.push_back(register_module(prefix, ResBlock(ch + skip, out_ch, temb, groups)));
      ch = out_ch;
      if (attn) {
        level.attention.push_back(
            register_module("up" + std::to_string(i) + "_attn" + std::to_string(b), SelfAttention(ch, groups)));
      }
    }
    if (i > 0) level.resample = register_module("up" + std::to_string(i) + "_upsample", conv3x3(ch, ch));
    up_.push_back(std::move(level));
  }

  out_norm_ = register_module("out_norm", torch::nn::GroupNorm(group_count(groups, ch), ch));
  out_conv_ = register_module("out_conv", conv3x3(ch, 3));
  initialize(0);
}

torch::Tensor ConditionalUNetImpl::forward(const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y0) {
  const auto res = config_.working_resolution;
  auto check = [&](const torch::Tensor& img, const char* what) {
    if (img.dim() != 4 || img.size(1) != 3 || img.size(2) != res || img.size(3) != res) {
      throw ShapeError(std::string("denoiser: ") + what + " must be N x 3 x " + std::to_string(res) + " x " +
                       std::to_string(res));
    }
  };
  check(x_t, "x_t");
  check(y0, "y0");
  require<ShapeError>(y0.size(0) == x_t.size(0), "denoiser: x_t and y0 batch sizes differ");
  require<ShapeError>(t.dim() == 1 && t.size(0) == x_t.size(0), "denoiser: need one step per batch element");

  auto emb = timestep_embedding(t, config_.time_embed_dim, x_t.scalar_type());
  emb = temb_fc2_(F::silu(temb_fc1_(emb)));

  auto h = in_conv_(torch::cat({x_t, y0}, 1));
  std::vector<torch::Tensor> skips{h};
  for (auto& level : down_) {
    for (std::size_t b = 0; b < level.blocks.size(); ++b) {
      h = level.blocks[b](h, emb);
      if (!level.attention.empty()) h = level.attention[b](h);
      skips.push_back(h);
    }
    if (level.resample) {
      h = level.resample(h);
      skips.push_back(h);
    }
  }

  h = mid2_(mid_attn_(mid1_(h, emb)), emb);

  for (auto& level : up_) {
    for (std::size_t b = 0; b < level.blocks.size(); ++b) {
      h = level.blocks[b](torch::cat({h, skips.back()}, 1), emb);
      skips.pop_back();
      if (!level.attention.empty()) h = level.attention[b](h);
    }
    if (level.resample) {
      h = level.resample(F::interpolate(
          h, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest)));
    }
  }
  return out_conv_(F::silu(out_norm_(h)));
}

void ConditionalUNetImpl::initialize(std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = make_generator(seed);
  for (auto& p : named_parameters()) {
    auto& value = p.value();
    if (value.dim() >= 2) {
      const auto fan_in = value.numel() / value.size(0);
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      value.uniform_(-bound, bound, gen);
    } else {
      value.zero_();
    }
  }
  for (auto& m : modules(/*include_self=*/false)) {
    if (auto* gn = m->as<torch::nn::GroupNorm>()) gn->weight.fill_(1.0);
  }
  out_conv_->weight.zero_();
  out_conv_->bias.zero_();
}

}  // namespace frr::denoiser
