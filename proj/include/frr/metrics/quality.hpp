// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>

#include <torch/torch.h>

namespace frr::metrics {

/// Returned by psnr() for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) in dB over all elements; kPsnrIdentical when MSE = 0.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 255.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 255.0;
};

/// Mean SSIM with a Gaussian window evaluated at every fully-covered position
/// ("valid" filtering). Multi-channel images: SSIM per channel, then the mean
/// over channels (and over the batch, for N x C x H x W input). Computed in
/// float64. Throws InvalidArgument when the image is smaller than the window.
double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options = {});

/// The normalized 2-D Gaussian window used by ssim(), window x window, float64.
torch::Tensor gaussian_window(int window, double sigma);

}  // namespace frr::metrics
