// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include <torch/torch.h>

#include "frr/diffusion/process.hpp"
#include "frr/diffusion/schedule.hpp"

namespace frr::testing {

/// Fresh, empty scratch directory under $FRR_TEST_TMP (or the system temp dir).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("FRR_TEST_TMP");
  auto dir = (base != nullptr ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "frr-tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Noise predictor that knows the clean images: for the batch row whose
/// condition equals conds[i] it returns the exact noise that maps targets[i]
/// to x_t, (x_t - sqrt(abar_t) x0) / sqrt(1 - abar_t).
inline diffusion::EpsPredictor oracle_predictor(const torch::Tensor& conds, const torch::Tensor& targets,
                                                const diffusion::NoiseSchedule& s) {
  return [conds, targets, &s](const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y0) {
    std::vector<torch::Tensor> rows;
    for (std::int64_t b = 0; b < x_t.size(0); ++b) {
      torch::Tensor x0;
      for (std::int64_t i = 0; i < conds.size(0); ++i) {
        if (torch::equal(conds[i], y0[b])) {
          x0 = targets[i];
          break;
        }
      }
      if (!x0.defined()) throw std::runtime_error("oracle predictor: unknown condition");
      const double ab = s.alpha_bar(t[b].item<std::int64_t>());
      rows.push_back((x_t[b] - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab));
    }
    return torch::stack(rows);
  };
}

/// Largest relative error between autograd and central differences over
/// `probes` parameter entries spread from the first to the last tensor of
/// `module`. The module should hold float64 parameters.
inline double worst_gradient_error(torch::nn::Module& module, const std::function<torch::Tensor()>& objective,
                                   std::int64_t probes = 16, double h = 1e-6) {
  module.zero_grad();
  objective().backward();
  const auto named = module.named_parameters();
  const auto count = static_cast<std::int64_t>(named.size());
  double worst = 0.0;
  for (std::int64_t k = 0; k < probes; ++k) {
    auto p = named[static_cast<std::size_t>((k * (count - 1)) / std::max<std::int64_t>(probes - 1, 1))].value();
    const auto index = (k * 7919) % p.numel();
    const double analytic = p.grad().view(-1)[index].item<double>();
    double plus, minus;
    {
      torch::NoGradGuard no_grad;
      auto flat = p.view(-1);
      const double orig = flat[index].item<double>();
      flat[index] = orig + h;
      plus = objective().item<double>();
      flat[index] = orig - h;
      minus = objective().item<double>();
      flat[index] = orig;
    }
    const double numeric = (plus - minus) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

}  // namespace frr::testing
