// SPDX-License-Identifier: Apache-2.0
#include "frr/data/resample.hpp"

#include <string>

#include "frr/core/error.hpp"

namespace frr::data {

namespace F = torch::nn::functional;

torch::Tensor resize_bicubic(const torch::Tensor& img, std::int64_t height, std::int64_t width) {
  require<ShapeError>(img.dim() == 3 || img.dim() == 4, "resize_bicubic: expected C x H x W or N x C x H x W");
  require(height > 0 && width > 0, "resize_bicubic: target size must be positive");
  const bool unbatched = img.dim() == 3;
  auto x = unbatched ? img.unsqueeze(0) : img;
  if (x.size(2) == height && x.size(3) == width) return img.clone();
  auto out = F::interpolate(x, F::InterpolateFuncOptions()
                                   .size(std::vector<std::int64_t>{height, width})
                                   .mode(torch::kBicubic)
                                   .align_corners(false)
                                   .antialias(true));
  return unbatched ? out.squeeze(0) : out;
}

torch::Tensor downsample(const torch::Tensor& img, std::int64_t target) {
  require<ShapeError>(img.dim() == 3 || img.dim() == 4, "downsample: expected C x H x W or N x C x H x W");
  const auto h = img.size(img.dim() - 2);
  const auto w = img.size(img.dim() - 1);
  if (target > h || target > w) {
    throw InvalidArgument("downsample: target " + std::to_string(target) + " would upscale a " + std::to_string(h) +
                          " x " + std::to_string(w) + " image");
  }
  require(target > 0, "downsample: target must be positive");
  return resize_bicubic(img, target, target);
}

}  // namespace frr::data
