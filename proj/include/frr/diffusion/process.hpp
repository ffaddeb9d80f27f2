// SPDX-License-Identifier: Apache-2.0
//
// Forward noising, posterior algebra, the noise-prediction loss, and the
// conditioned ancestral sampler of the stage-1 restorer.
//
// All functions are element-wise in the image and accept any tensor rank;
// they preserve dtype so that tests can run in float64.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include <torch/torch.h>

#include "frr/diffusion/schedule.hpp"

namespace frr::diffusion {

/// eps_theta(x_t, t, y0). Receives N x C x H x W images and an int64 tensor of
/// N steps; must return a tensor shaped like x_t.
using EpsPredictor =
    std::function<torch::Tensor(const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y0)>;

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
torch::Tensor forward_marginal_sample(const torch::Tensor& x0, std::int64_t t, const torch::Tensor& eps,
                                      const NoiseSchedule& s);
/// Batched variant: `t` holds one step per leading-dimension element of x0.
torch::Tensor forward_marginal_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                                      const NoiseSchedule& s);

/// One Markov step of q(x_t | x_{t-1}): sqrt(1 - beta_t) x_prev + sqrt(beta_t) noise.
torch::Tensor forward_step(const torch::Tensor& x_prev, std::int64_t t, const NoiseSchedule& s,
                           const torch::Tensor& noise);

struct Posterior {
  torch::Tensor mean;
  double variance = 0.0;
};

/// Mean and variance of q(x_{t-1} | x_t, x0).
Posterior posterior_params(const torch::Tensor& x_t, const torch::Tensor& x0, std::int64_t t,
                           const NoiseSchedule& s);

/// (1 / sqrt(alpha_t)) (x_t - (1 - alpha_t) / sqrt(1 - abar_t) eps).
torch::Tensor posterior_mean_from_eps(const torch::Tensor& x_t, std::int64_t t, const torch::Tensor& eps,
                                      const NoiseSchedule& s);

/// Mean squared error over every element of the batch. Differentiable.
torch::Tensor training_loss(const torch::Tensor& eps_true, const torch::Tensor& eps_pred);

/// One reverse step: posterior_mean_from_eps(n_t, t, eps_pred) + posterior_std(t) z.
/// `z` must be all zeros at t = 1 (ContractViolation otherwise).
torch::Tensor sample_step(const torch::Tensor& n_t, std::int64_t t, const torch::Tensor& eps_pred,
                          const NoiseSchedule& s, const torch::Tensor& z);

/// Full conditioned chain: x_T ~ N(0, I) from a generator seeded with `seed`,
/// then sample_step for t = T..1 with z drawn from the same generator (z = 0
/// at t = 1). `y0` may be C x H x W or N x C x H x W; the result has the same
/// rank. A pure function of (predictor, y0, seed).
torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 std::uint64_t seed);

struct SamplerOptions {
  /// When set, each reverse step recovers x0 from the predicted noise,
  /// clamps it to [-1, 1] and takes the posterior mean of q(x_{t-1} | x_t, x0)
  /// instead of the plain noise-based mean. Off by default.
  bool clip_denoised = false;
};

void to_json(nlohmann::json& j, const SamplerOptions& o);
void from_json(const nlohmann::json& j, SamplerOptions& o);

torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 std::uint64_t seed, const SamplerOptions& options);

/// Batched chain with one seed per image: image i draws x_T and every z from
/// its own generator seeded with seeds[i], so its result does not depend on
/// which other images share the batch (up to floating-point reassociation in
/// the predictor). `y0` is N x C x H x W with N == seeds.size().
torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 const std::vector<std::uint64_t>& seeds, const SamplerOptions& options = {});

/// x0 implied by x_t and a noise estimate: (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
torch::Tensor predict_x0_from_eps(const torch::Tensor& x_t, std::int64_t t, const torch::Tensor& eps,
                                  const NoiseSchedule& s);

struct TrainBatch {
  torch::Tensor x0;  // N x C x H x W raw images, model space
  torch::Tensor y0;  // N x C x H x W retouched condition, model space
  std::string id;    // names the batch in diagnostics
};

/// One gradient step of the noise-prediction objective: t ~ U{1..T} per
/// element, eps ~ N(0, I), x_t from forward_marginal_sample, loss against
/// predictor(x_t, t, y0). Randomness comes only from `seed`. Throws
/// NumericError naming the batch when the loss is not finite.
double train_step(const TrainBatch& batch, const NoiseSchedule& s, const EpsPredictor& predictor,
                  torch::optim::Optimizer& optimizer, std::uint64_t seed);

}  // namespace frr::diffusion
