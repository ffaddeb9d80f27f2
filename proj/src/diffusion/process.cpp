// SPDX-License-Identifier: Apache-2.0
#include "frr/diffusion/process.hpp"

#include <cmath>
#include <sstream>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"

namespace frr::diffusion {

namespace {

// Per-element coefficients gathered from a schedule table, shaped to
// broadcast over N x ... images.
torch::Tensor gather_coefficients(std::span<const double> table, const torch::Tensor& t, const torch::Tensor& like) {
  auto tab = torch::from_blob(const_cast<double*>(table.data()), {static_cast<std::int64_t>(table.size())},
                              torch::kFloat64);
  auto coeff = tab.index_select(0, t.to(torch::kLong) - 1).to(like.scalar_type());
  std::vector<std::int64_t> shape(static_cast<std::size_t>(like.dim()), 1);
  shape[0] = like.size(0);
  return coeff.view(shape);
}

}  // namespace

torch::Tensor forward_marginal_sample(const torch::Tensor& x0, std::int64_t t, const torch::Tensor& eps,
                                      const NoiseSchedule& s) {
  check_same_shape(x0, eps, "forward_marginal_sample");
  const double ab = s.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

torch::Tensor forward_marginal_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                                      const NoiseSchedule& s) {
  check_same_shape(x0, eps, "forward_marginal_sample");
  require<ShapeError>(t.dim() == 1 && x0.dim() >= 1 && t.size(0) == x0.size(0),
                      "forward_marginal_sample: need one step per batch element");
  const auto lo = t.min().item<std::int64_t>();
  const auto hi = t.max().item<std::int64_t>();
  s.check_step(lo);
  s.check_step(hi);
  auto ab = gather_coefficients(s.alpha_bars(), t, x0);
  return ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps;
}

torch::Tensor forward_step(const torch::Tensor& x_prev, std::int64_t t, const NoiseSchedule& s,
                           const torch::Tensor& noise) {
  check_same_shape(x_prev, noise, "forward_step");
  const double b = s.beta(t);
  return std::sqrt(1.0 - b) * x_prev + std::sqrt(b) * noise;
}

Posterior posterior_params(const torch::Tensor& x_t, const torch::Tensor& x0, std::int64_t t,
                           const NoiseSchedule& s) {
  check_same_shape(x_t, x0, "posterior_params");
  const double a = s.alpha(t);
  const double ab = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar_prev(t);
  const double coef_xt = std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab);
  const double coef_x0 = std::sqrt(ab_prev) * (1.0 - a) / (1.0 - ab);
  return {coef_xt * x_t + coef_x0 * x0, s.posterior_variance(t)};
}

torch::Tensor posterior_mean_from_eps(const torch::Tensor& x_t, std::int64_t t, const torch::Tensor& eps,
                                      const NoiseSchedule& s) {
  check_same_shape(x_t, eps, "posterior_mean_from_eps");
  const double a = s.alpha(t);
  const double ab = s.alpha_bar(t);
  return (x_t - ((1.0 - a) / std::sqrt(1.0 - ab)) * eps) / std::sqrt(a);
}

torch::Tensor training_loss(const torch::Tensor& eps_true, const torch::Tensor& eps_pred) {
  check_same_shape(eps_true, eps_pred, "training_loss");
  return (eps_true - eps_pred).pow(2).mean();
}

torch::Tensor sample_step(const torch::Tensor& n_t, std::int64_t t, const torch::Tensor& eps_pred,
                          const NoiseSchedule& s, const torch::Tensor& z) {
  check_same_shape(n_t, z, "sample_step");
  s.check_step(t);
  if (t == 1 && z.count_nonzero().item<std::int64_t>() != 0) {
    throw ContractViolation("sample_step: z must be zero at t=1");
  }
  auto mean = posterior_mean_from_eps(n_t, t, eps_pred, s);
  const double sigma = s.posterior_std(t);
  return sigma == 0.0 ? mean : mean + sigma * z;
}

torch::Tensor predict_x0_from_eps(const torch::Tensor& x_t, std::int64_t t, const torch::Tensor& eps,
                                  const NoiseSchedule& s) {
  check_same_shape(x_t, eps, "predict_x0_from_eps");
  const double ab = s.alpha_bar(t);
  return (x_t - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab);
}

void to_json(nlohmann::json& j, const SamplerOptions& o) { j = {{"clip_denoised", o.clip_denoised}}; }

void from_json(const nlohmann::json& j, SamplerOptions& o) {
  o.clip_denoised = j.value("clip_denoised", SamplerOptions{}.clip_denoised);
}

namespace {

torch::Tensor checked_eps(const EpsPredictor& predictor, const torch::Tensor& x, std::int64_t t,
                          const torch::Tensor& cond) {
  auto steps = torch::full({cond.size(0)}, t, torch::kLong);
  auto eps = predictor(x, steps, cond);
  if (!eps.defined() || eps.sizes() != x.sizes()) {
    std::ostringstream os;
    os << "sample_conditional: predictor output shape " << (eps.defined() ? eps.sizes() : c10::IntArrayRef{})
       << " does not match x_t shape " << x.sizes() << " at step t=" << t;
    throw ShapeError(os.str());
  }
  return eps;
}

torch::Tensor reverse_step(const torch::Tensor& x, std::int64_t t, const torch::Tensor& eps, const NoiseSchedule& s,
                           const torch::Tensor& z, const SamplerOptions& options) {
  if (!options.clip_denoised) return sample_step(x, t, eps, s, z);
  auto mean = posterior_params(x, predict_x0_from_eps(x, t, eps, s).clamp(-1.0, 1.0), t, s).mean;
  const double sigma = s.posterior_std(t);
  return sigma == 0.0 ? mean : mean + sigma * z;
}

}  // namespace

torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 std::uint64_t seed, const SamplerOptions& options) {
  require<ShapeError>(y0.dim() == 3 || y0.dim() == 4, "sample_conditional: y0 must be C x H x W or N x C x H x W");
  torch::NoGradGuard no_grad;
  const bool unbatched = y0.dim() == 3;
  const auto cond = unbatched ? y0.unsqueeze(0) : y0;

  auto gen = make_generator(seed);
  auto x = torch::randn(cond.sizes(), gen, cond.options());
  for (std::int64_t t = s.steps(); t >= 1; --t) {
    auto eps = checked_eps(predictor, x, t, cond);
    auto z = t > 1 ? torch::randn(x.sizes(), gen, x.options()) : torch::zeros_like(x);
    x = reverse_step(x, t, eps, s, z, options);
  }
  return unbatched ? x.squeeze(0) : x;
}

torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 std::uint64_t seed) {
  return sample_conditional(predictor, y0, s, seed, SamplerOptions{});
}

torch::Tensor sample_conditional(const EpsPredictor& predictor, const torch::Tensor& y0, const NoiseSchedule& s,
                                 const std::vector<std::uint64_t>& seeds, const SamplerOptions& options) {
  require<ShapeError>(y0.dim() == 4, "sample_conditional: batched y0 must be N x C x H x W");
  require<ShapeError>(static_cast<std::size_t>(y0.size(0)) == seeds.size(),
                      "sample_conditional: need exactly one seed per image");
  torch::NoGradGuard no_grad;
  const auto one = y0[0].sizes().vec();
  std::vector<torch::Generator> gens;
  std::vector<torch::Tensor> init;
  for (auto seed : seeds) {
    gens.push_back(make_generator(seed));
    init.push_back(torch::randn(one, gens.back(), y0.options()));
  }
  auto x = torch::stack(init);
  for (std::int64_t t = s.steps(); t >= 1; --t) {
    auto eps = checked_eps(predictor, x, t, y0);
    torch::Tensor z;
    if (t > 1) {
      std::vector<torch::Tensor> parts;
      for (auto& g : gens) parts.push_back(torch::randn(one, g, y0.options()));
      z = torch::stack(parts);
    } else {
      z = torch::zeros_like(x);
    }
    x = reverse_step(x, t, eps, s, z, options);
  }
  return x;
}

double train_step(const TrainBatch& batch, const NoiseSchedule& s, const EpsPredictor& predictor,
                  torch::optim::Optimizer& optimizer, std::uint64_t seed) {
  require(batch.x0.defined() && batch.x0.dim() == 4 && batch.x0.size(0) > 0,
          "train_step: batch '" + batch.id + "' must be a nonempty N x C x H x W tensor");
  check_same_shape(batch.x0, batch.y0, "train_step batch '" + batch.id + "'");

  auto gen = make_generator(seed);
  const auto n = batch.x0.size(0);
  auto t = torch::randint(1, s.steps() + 1, {n}, gen, torch::kLong);
  auto eps = torch::randn(batch.x0.sizes(), gen, batch.x0.options());
  auto x_t = forward_marginal_sample(batch.x0, t, eps, s);

  optimizer.zero_grad();
  auto loss = training_loss(eps, predictor(x_t, t, batch.y0));
  const double value = loss.item<double>();
  if (!std::isfinite(value)) {
    throw NumericError("train_step: non-finite loss on batch '" + batch.id + "'");
  }
  if (loss.requires_grad()) {
    loss.backward();
    optimizer.step();
  }
  return value;
}

}  // namespace frr::diffusion
