// SPDX-License-Identifier: Apache-2.0
#include "frr/sr/attention.hpp"

#include <cmath>

#include "frr/core/error.hpp"

namespace frr::sr {

namespace F = torch::nn::functional;

torch::Tensor window_partition(const torch::Tensor& x, std::int64_t wh, std::int64_t ww) {
  const auto b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
  require<ShapeError>(h % wh == 0 && w % ww == 0, "window_partition: map not divisible by window");
  return x.view({b, h / wh, wh, w / ww, ww, c}).permute({0, 1, 3, 2, 4, 5}).reshape({-1, wh * ww, c});
}

torch::Tensor window_reverse(const torch::Tensor& windows, std::int64_t wh, std::int64_t ww, std::int64_t h,
                             std::int64_t w) {
  const auto c = windows.size(-1);
  const auto b = windows.size(0) / ((h / wh) * (w / ww));
  return windows.reshape({b, h / wh, w / ww, wh, ww, c}).permute({0, 1, 3, 2, 4, 5}).reshape({b, h, w, c});
}

torch::Tensor relative_position_index(std::int64_t qh, std::int64_t qw, std::int64_t pad, std::int64_t window,
                                      std::int64_t key_window) {
  const auto kh = qh + 2 * pad, kw = qw + 2 * pad;
  const auto side = window + key_window - 1;
  auto index = torch::empty({qh * qw, kh * kw}, torch::kLong);
  auto acc = index.accessor<std::int64_t, 2>();
  for (std::int64_t qi = 0; qi < qh * qw; ++qi) {
    const auto qy = qi / qw, qx = qi % qw;
    for (std::int64_t ki = 0; ki < kh * kw; ++ki) {
      const auto ky = ki / kw, kx = ki % kw;
      acc[qi][ki] = (qy - ky + key_window - 1) * side + (qx - kx + key_window - 1);
    }
  }
  return index;
}

torch::Tensor shifted_window_mask(std::int64_t h, std::int64_t w, std::int64_t window, std::int64_t shift) {
  auto region = [&](std::int64_t v, std::int64_t size) -> std::int64_t {
    if (v < size - window) return 0;
    return v < size - shift ? 1 : 2;
  };
  auto ids = torch::empty({1, h, w, 1}, torch::kFloat32);
  auto acc = ids.accessor<float, 4>();
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) acc[0][y][x][0] = static_cast<float>(region(y, h) * 3 + region(x, w));
  }
  auto win = window_partition(ids, window, window).squeeze(-1);
  auto diff = win.unsqueeze(1) - win.unsqueeze(2);
  return torch::where(diff != 0, torch::full({}, -100.0f), torch::zeros({}));
}

torch::Tensor pad_to_multiple(const torch::Tensor& x, std::int64_t wh, std::int64_t ww) {
  const auto h = x.size(1), w = x.size(2);
  const auto ph = (wh - h % wh) % wh, pw = (ww - w % ww) % ww;
  if (ph == 0 && pw == 0) return x;
  if (ph >= h || pw >= w) {
    throw ShapeError("window " + std::to_string(wh) + " x " + std::to_string(ww) + " needs padding " +
                     std::to_string(ph) + " x " + std::to_string(pw) + " on a " + std::to_string(h) + " x " +
                     std::to_string(w) + " feature map; reflection padding must be smaller than the map");
  }
  auto chw = x.permute({0, 3, 1, 2});
  return F::pad(chw, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReflect)).permute({0, 2, 3, 1});
}

MlpImpl::MlpImpl(std::int64_t dim, std::int64_t hidden) {
  fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor MlpImpl::forward(const torch::Tensor& x) { return fc2(torch::gelu(fc1(x))); }

WindowAttentionImpl::WindowAttentionImpl(std::int64_t dim_, std::int64_t window_, std::int64_t heads_)
    : dim(dim_), window(window_), heads(heads_) {
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
  bias_table = register_parameter("bias_table", torch::zeros({(2 * window - 1) * (2 * window - 1), heads}));
}

torch::Tensor WindowAttentionImpl::forward(const torch::Tensor& windows, std::int64_t qh, std::int64_t qw,
                                           const std::optional<torch::Tensor>& mask) {
  const auto nb = windows.size(0), n = windows.size(1), c = windows.size(2);
  require<ShapeError>(n == qh * qw && c == dim, "window attention: token count or width mismatch");
  const auto head_dim = dim / heads;
  auto packed = qkv(windows).reshape({nb, n, 3, heads, head_dim}).permute({2, 0, 3, 1, 4});
  auto q = packed[0] * (1.0 / std::sqrt(static_cast<double>(head_dim)));
  auto k = packed[1], v = packed[2];
  auto attn = q.matmul(k.transpose(-2, -1));
  const auto index = relative_position_index(qh, qw, 0, window, window);
  auto bias = bias_table.index_select(0, index.flatten()).view({n, n, heads}).permute({2, 0, 1});
  attn = attn + bias.unsqueeze(0);
  if (mask) {
    const auto nw = mask->size(0);
    attn = attn.view({nb / nw, nw, heads, n, n}) + mask->to(attn.dtype()).unsqueeze(1).unsqueeze(0);
    attn = attn.view({nb, heads, n, n});
  }
  attn = attn.softmax(-1);
  return proj(attn.matmul(v).transpose(1, 2).reshape({nb, n, c}));
}

ChannelAttentionImpl::ChannelAttentionImpl(std::int64_t dim, std::int64_t squeeze) {
  reduce = register_module("reduce", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, dim / squeeze, 1)));
  expand = register_module("expand", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim / squeeze, dim, 1)));
}

torch::Tensor ChannelAttentionImpl::forward(const torch::Tensor& x) {
  auto pooled = x.mean({2, 3}, /*keepdim=*/true);
  return x * torch::sigmoid(expand(torch::relu(reduce(pooled))));
}

ChannelAttentionBlockImpl::ChannelAttentionBlockImpl(std::int64_t dim, std::int64_t compress, std::int64_t squeeze) {
  conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, dim / compress, 3).padding(1)));
  conv2 = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim / compress, dim, 3).padding(1)));
  gate = register_module("gate", ChannelAttention(dim, squeeze));
}

torch::Tensor ChannelAttentionBlockImpl::forward(const torch::Tensor& x) {
  return gate(conv2(torch::gelu(conv1(x))));
}

HybridAttentionBlockImpl::HybridAttentionBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t window_,
                                                   std::int64_t shift_, double mlp_ratio, std::int64_t compress,
                                                   std::int64_t squeeze)
    : window(window_), shift(shift_) {
  require<ConfigError>(shift >= 0 && shift < window, "hybrid attention block: shift must lie in [0, window)");
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", WindowAttention(dim, window, heads));
  cab = register_module("cab", ChannelAttentionBlock(dim, compress, squeeze));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  mlp = register_module("mlp", Mlp(dim, static_cast<std::int64_t>(static_cast<double>(dim) * mlp_ratio)));
}

torch::Tensor HybridAttentionBlockImpl::forward(const torch::Tensor& x, double ca_weight) {
  require<ShapeError>(x.dim() == 4, "hybrid attention block: expected B x C x H x W");
  const auto h = x.size(2), w = x.size(3);
  auto tokens = x.permute({0, 2, 3, 1});
  auto normed = norm1(tokens);
  auto conv_branch = cab(normed.permute({0, 3, 1, 2})).permute({0, 2, 3, 1});

  const auto wh = std::min(window, h), ww = std::min(window, w);
  const auto s = (h > window && w > window) ? shift : 0;
  auto padded = pad_to_multiple(normed, wh, ww);
  const auto hp = padded.size(1), wp = padded.size(2);
  std::optional<torch::Tensor> mask;
  if (s > 0) {
    padded = torch::roll(padded, {-s, -s}, {1, 2});
    mask = shifted_window_mask(hp, wp, window, s);
  }
  auto attended = window_reverse(attn(window_partition(padded, wh, ww), wh, ww, mask), wh, ww, hp, wp);
  if (s > 0) attended = torch::roll(attended, {s, s}, {1, 2});
  attended = attended.slice(1, 0, h).slice(2, 0, w);

  auto out = tokens + attended + ca_weight * conv_branch;
  out = out + mlp(norm2(out));
  return out.permute({0, 3, 1, 2});
}

OverlapCrossAttentionImpl::OverlapCrossAttentionImpl(std::int64_t dim_, std::int64_t heads_, std::int64_t window_,
                                                     std::int64_t key_window_, double mlp_ratio)
    : dim(dim_), heads(heads_), window(window_), key_window(key_window_) {
  require<ConfigError>(key_window >= window && (key_window - window) % 2 == 0,
                       "overlap cross-attention: key window must exceed the window by an even amount");
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  bias_table = register_parameter("bias_table", torch::zeros({(window + key_window - 1) * (window + key_window - 1), heads}));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  mlp = register_module("mlp", Mlp(dim, static_cast<std::int64_t>(static_cast<double>(dim) * mlp_ratio)));
}

torch::Tensor OverlapCrossAttentionImpl::forward(const torch::Tensor& x) {
  require<ShapeError>(x.dim() == 4 && x.size(1) == dim, "overlap cross-attention: expected B x C x H x W");
  const auto b = x.size(0), h = x.size(2), w = x.size(3);
  const auto pad = (key_window - window) / 2;
  const auto wh = std::min(window, h), ww = std::min(window, w);
  const auto kh = wh + 2 * pad, kw = ww + 2 * pad;
  const auto head_dim = dim / heads;

  auto tokens = x.permute({0, 2, 3, 1});
  auto packed = pad_to_multiple(qkv(norm1(tokens)), wh, ww);
  const auto hp = packed.size(1), wp = packed.size(2);

  auto q = window_partition(packed.slice(3, 0, dim), wh, ww);  // [B', wh*ww, C]
  auto kv_map = packed.slice(3, dim).permute({0, 3, 1, 2}).contiguous();
  auto cols = F::unfold(kv_map, F::UnfoldFuncOptions({kh, kw}).stride({wh, ww}).padding({pad, pad}));
  const auto nw = cols.size(2);
  auto kv = cols.view({b, 2, dim, kh * kw, nw}).permute({1, 0, 4, 3, 2}).reshape({2, b * nw, kh * kw, dim});

  const auto nb = q.size(0), nq = wh * ww, nk = kh * kw;
  auto qh = q.view({nb, nq, heads, head_dim}).transpose(1, 2) * (1.0 / std::sqrt(static_cast<double>(head_dim)));
  auto k = kv[0].view({nb, nk, heads, head_dim}).transpose(1, 2);
  auto v = kv[1].view({nb, nk, heads, head_dim}).transpose(1, 2);
  auto attn = qh.matmul(k.transpose(-2, -1));
  const auto index = relative_position_index(wh, ww, pad, window, key_window);
  attn = attn + bias_table.index_select(0, index.flatten()).view({nq, nk, heads}).permute({2, 0, 1}).unsqueeze(0);
  attn = attn.softmax(-1);
  auto out = attn.matmul(v).transpose(1, 2).reshape({nb, nq, dim});
  out = window_reverse(out, wh, ww, hp, wp).slice(1, 0, h).slice(2, 0, w);

  auto y = tokens + proj(out);
  y = y + mlp(norm2(y));
  return y.permute({0, 3, 1, 2});
}

}  // namespace frr::sr
