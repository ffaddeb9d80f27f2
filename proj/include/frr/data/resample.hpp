// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace frr::data {

/// Bicubic (a = -0.5) resampling to `height` x `width`. When shrinking, the
/// kernel is stretched by the scale factor (antialiased, PIL semantics).
/// Works on C x H x W or N x C x H x W tensors of any value range; the result
/// is not clamped, bicubic overshoot is left to the caller.
torch::Tensor resize_bicubic(const torch::Tensor& img, std::int64_t height, std::int64_t width);

/// Square bicubic downsampling to target x target. Throws InvalidArgument if
/// that would enlarge either side. target equal to the source size is the
/// identity.
torch::Tensor downsample(const torch::Tensor& img, std::int64_t target);

}  // namespace frr::data
