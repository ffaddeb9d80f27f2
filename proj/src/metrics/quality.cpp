// SPDX-License-Identifier: Apache-2.0
#include "frr/metrics/quality.hpp"

#include <cmath>
#include <string>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"

namespace frr::metrics {

namespace F = torch::nn::functional;

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) {
  check_same_shape(a, b, "psnr");
  require(peak > 0.0, "psnr: peak must be positive");
  const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / mse);
}

torch::Tensor gaussian_window(int window, double sigma) {
  auto coords = torch::arange(window, torch::kFloat64) - (window - 1) / 2.0;
  auto g = torch::exp(-coords.pow(2) / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& o) {
  check_same_shape(a, b, "ssim");
  require<ShapeError>(a.dim() >= 2 && a.dim() <= 4, "ssim: expected H x W, C x H x W or N x C x H x W");
  const auto h = a.size(a.dim() - 2);
  const auto w = a.size(a.dim() - 1);
  if (h < o.window || w < o.window) {
    throw InvalidArgument("ssim: image " + std::to_string(h) + " x " + std::to_string(w) + " is smaller than the " +
                          std::to_string(o.window) + " x " + std::to_string(o.window) + " window");
  }
  // Flatten every channel of every image into its own 1-channel plane.
  auto x = a.to(torch::kFloat64).reshape({-1, 1, h, w});
  auto y = b.to(torch::kFloat64).reshape({-1, 1, h, w});
  auto kernel = gaussian_window(o.window, o.sigma).view({1, 1, o.window, o.window});
  auto filt = [&](const torch::Tensor& t) { return F::conv2d(t, kernel); };

  const double c1 = std::pow(o.k1 * o.peak, 2);
  const double c2 = std::pow(o.k2 * o.peak, 2);
  auto mu_x = filt(x), mu_y = filt(y);
  auto var_x = filt(x * x) - mu_x * mu_x;
  auto var_y = filt(y * y) - mu_y * mu_y;
  auto cov = filt(x * y) - mu_x * mu_y;
  auto map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x.pow(2) + mu_y.pow(2) + c1) * (var_x + var_y + c2));
  // Mean per plane, then over planes: equal-sized planes make this the global mean.
  return map.mean().item<double>();
}

}  // namespace frr::metrics
