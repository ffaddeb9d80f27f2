// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "frr/core/archive.hpp"
#include "frr/core/ema.hpp"
#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/denoiser/checkpoint.hpp"
#include "support.hpp"

using namespace frr;
using namespace frr::denoiser;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig c;
  c.working_resolution = 8;
  c.base_channels = 8;
  c.channel_multipliers = {1, 2};
  c.time_embed_dim = 16;
  c.attention_levels = {1};
  c.res_blocks_per_level = 1;
  c.norm_groups = 4;
  return c;
}

// Moves every parameter away from its (partly zero) initialization so that
// gradients reach all layers.
void perturb(ConditionalUNet& net, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = make_generator(seed);
  for (auto& p : net->parameters()) p.add_(torch::randn(p.sizes(), gen, p.options()) * 0.1);
}

}  // namespace

TEST_CASE("denoiser config validation", "[denoiser]") {
  CHECK_NOTHROW(DenoiserConfig::desk().validate());
  CHECK_NOTHROW(DenoiserConfig::paper_scale().validate());
  auto c = DenoiserConfig::desk();
  c.working_resolution = 30;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DenoiserConfig::desk();
  c.norm_groups = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DenoiserConfig::desk();
  c.attention_levels = {5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DenoiserConfig::desk();
  c.time_embed_dim = 15;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const nlohmann::json j = DenoiserConfig::paper_scale();
  CHECK(j.get<DenoiserConfig>() == DenoiserConfig::paper_scale());
}

TEST_CASE("timestep embedding halves are sine and cosine", "[denoiser]") {
  const auto e = timestep_embedding(torch::tensor({0, 7}, torch::kLong), 8, torch::kFloat64);
  REQUIRE(e.sizes() == torch::IntArrayRef({2, 8}));
  CHECK(e[0].slice(0, 0, 4).abs().max().item<double>() == 0.0);
  CHECK(e[0].slice(0, 4, 8).allclose(torch::ones({4}, torch::kFloat64)));
  const auto row = e[1];
  CHECK((row.slice(0, 0, 4).pow(2) + row.slice(0, 4, 8).pow(2)).allclose(torch::ones({4}, torch::kFloat64)));
}

TEST_CASE("fresh denoiser predicts zero noise with the input shape", "[denoiser]") {
  const auto ckpt = init_denoiser(DenoiserConfig::desk(), 3);
  auto gen = make_generator(1);
  const auto x = torch::randn({2, 3, 32, 32}, gen);
  const auto eps = predict_eps(ckpt, x, torch::tensor({1, 900}, torch::kLong), x);
  CHECK(eps.sizes() == x.sizes());
  CHECK(eps.abs().max().item<double>() == 0.0);
  CHECK(predict_eps(ckpt, x[0], 5, x[0]).dim() == 3);
  CHECK_THROWS_AS(predict_eps(ckpt, x, 1001, x), InvalidArgument);
  CHECK_THROWS_AS(predict_eps(ckpt, x, 0, x), InvalidArgument);
}

TEST_CASE("initialization is a pure function of the seed", "[denoiser]") {
  const auto a = init_denoiser(tiny_config(), 7), b = init_denoiser(tiny_config(), 7), c = init_denoiser(tiny_config(), 8);
  const auto pa = a.model()->parameters(), pb = b.model()->parameters(), pc = c.model()->parameters();
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    all_equal = all_equal && pa[i].equal(pb[i]);
    any_diff = any_diff || !pa[i].equal(pc[i]);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("pinned parameter counts", "[denoiser]") {
  CHECK(init_denoiser(DenoiserConfig::desk(), 0).parameter_count() == 1127107);
}

TEST_CASE("denoiser gradients match central differences", "[denoiser][gradcheck]") {
  auto ckpt = init_denoiser(tiny_config(), 1);
  auto& net = ckpt.model();
  net->to(torch::kFloat64);
  perturb(net, 2);
  auto gen = make_generator(3);
  const auto x = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  const auto y = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  const auto t = torch::tensor({3, 700}, torch::kLong);
  const auto weights = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  auto objective = [&] { return (net->forward(x, t, y) * weights).sum(); };

  net->zero_grad();
  objective().backward();
  // 16 entries spread over the network: first, middle and last layers.
  const auto named = net->named_parameters();
  std::vector<std::pair<torch::Tensor, std::int64_t>> probes;
  const auto count = static_cast<std::int64_t>(named.size());
  for (std::int64_t k = 0; k < 16; ++k) {
    const auto& p = named[static_cast<std::size_t>((k * (count - 1)) / 15)].value();
    probes.emplace_back(p, (k * 7919) % p.numel());
  }
  const double h = 1e-6;
  for (auto& [p, index] : probes) {
    auto flat = p.view(-1);
    const double analytic = p.grad().view(-1)[index].item<double>();
    double plus, minus;
    {
      torch::NoGradGuard no_grad;
      const double orig = flat[index].item<double>();
      flat[index] = orig + h;
      plus = objective().item<double>();
      flat[index] = orig - h;
      minus = objective().item<double>();
      flat[index] = orig;
    }
    const double numeric = (plus - minus) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    INFO("analytic " << analytic << " numeric " << numeric);
    CHECK(std::abs(analytic - numeric) / scale < 1e-3);
  }
}

TEST_CASE("denoiser checkpoints round-trip with training state", "[denoiser][checkpoint]") {
  const auto dir = testing::scratch_dir("denoiser_ckpt");
  auto ckpt = init_denoiser(tiny_config(), 5, diffusion::ScheduleSpec{200, 1e-4, 0.02, "linear"});
  perturb(ckpt.model(), 6);
  ckpt.step = 42;
  const auto params = ckpt.model()->named_parameters();
  torch::optim::Adam adam(ckpt.model()->parameters(), torch::optim::AdamOptions(1e-3));
  {
    auto loss = ckpt.model()->forward(torch::ones({1, 3, 8, 8}), torch::tensor({3}, torch::kLong), torch::ones({1, 3, 8, 8})).sum();
    loss.backward();
    adam.step();
  }
  ParameterEma ema(params, 0.9);
  ema.update(params);
  {
    torch::NoGradGuard g;
    for (auto& p : ckpt.model()->parameters()) p.add_(0.5);
  }
  ema.update(params);
  const std::vector<double> history{0.5, 0.25, 0.125};
  save_checkpoint(dir / "a.frr", ckpt, {&adam, &ema, &history});

  const auto loaded = load_checkpoint(dir / "a.frr");
  CHECK(loaded.step == 42);
  CHECK(loaded.config() == tiny_config());
  CHECK(loaded.schedule() == ckpt.schedule());
  const auto lp = loaded.model()->named_parameters();
  for (const auto& item : params) CHECK(lp[item.key()].equal(item.value()));

  const auto averaged = load_checkpoint(dir / "a.frr", WeightSelection::averaged_if_available);
  for (const auto& [name, avg] : ema.shadow()) CHECK(averaged.model()->named_parameters()[name].equal(avg));

  torch::optim::Adam adam2(loaded.model()->parameters(), torch::optim::AdamOptions(1e-3));
  ParameterEma ema2(lp, 0.9);
  std::vector<double> history2;
  load_training_state(dir / "a.frr", loaded, {&adam2, &ema2, &history2});
  CHECK(history2 == history);
  for (std::size_t i = 0; i < ema.shadow().size(); ++i) CHECK(ema2.shadow()[i].second.equal(ema.shadow()[i].second));
  REQUIRE(adam2.state().size() == adam.state().size());
  for (const auto& item : params) {
    const auto& a = static_cast<const torch::optim::AdamParamState&>(*adam.state().at(item.value().unsafeGetTensorImpl()));
    const auto& b =
        static_cast<const torch::optim::AdamParamState&>(*adam2.state().at(lp[item.key()].unsafeGetTensorImpl()));
    CHECK(a.step() == b.step());
    CHECK(a.exp_avg().equal(b.exp_avg()));
    CHECK(a.exp_avg_sq().equal(b.exp_avg_sq()));
  }

  SECTION("deep copies do not share storage") {
    DenoiserCheckpoint copy = loaded;
    {
      torch::NoGradGuard g;
      copy.model()->parameters()[0].add_(1.0);
    }
    CHECK(!copy.model()->parameters()[0].equal(loaded.model()->parameters()[0]));
  }
  SECTION("a mismatched archive is refused before anything is copied") {
    TensorArchive archive = load_archive(dir / "a.frr");
    auto meta_config = archive.meta["config"];
    meta_config["base_channels"] = 16;
    meta_config["norm_groups"] = 4;
    archive.meta["config"] = meta_config;
    save_archive(dir / "b.frr", archive);
    CHECK_THROWS_AS(load_checkpoint(dir / "b.frr"), CheckpointError);
    archive.meta["component"] = "sr";
    save_archive(dir / "c.frr", archive);
    CHECK_THROWS_AS(load_checkpoint(dir / "c.frr"), CheckpointError);
    archive.meta["format_version"] = 99;
    save_archive(dir / "d.frr", archive);
    CHECK_THROWS_AS(load_checkpoint(dir / "d.frr"), CheckpointError);
  }
  SECTION("a truncated file is an error, not a crash") {
    auto bytes = read_bytes(dir / "a.frr");
    bytes.resize(bytes.size() / 2);
    write_bytes_atomic(dir / "e.frr", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir / "e.frr"), Error);
  }
}
