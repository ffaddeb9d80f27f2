// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "frr/core/hash.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/data/builder.hpp"
#include "frr/data/face_synth.hpp"
#include "frr/data/manifest.hpp"
#include "frr/data/retouch.hpp"
#include "frr/denoiser/checkpoint.hpp"
#include "frr/diffusion/process.hpp"
#include "frr/diffusion/schedule.hpp"
#include "frr/metrics/density.hpp"
#include "frr/metrics/quality.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/sr/backend.hpp"
#include "frr/sr/hat.hpp"
#include "support.hpp"

using namespace frr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

bool run_criterion(int number, double budget_seconds, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << "[exception: " << e.what() << "] ";
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (seconds >= budget_seconds) {
    v.pass = false;
    v.detail << "[over the " << budget_seconds << " s budget] ";
  }
  std::cout << "criterion " << number << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail.str() << "("
            << std::fixed << std::setprecision(1) << seconds << " s)" << std::endl;
  return v.pass;
}

const diffusion::NoiseSchedule& schedule() {
  static const diffusion::NoiseSchedule s(diffusion::ScheduleSpec{1000, 1e-4, 0.02, "linear"});
  return s;
}

// 1. Posterior mean via the noise equals the posterior mean via x0; schedule
// recurrence against long double.
void diffusion_algebra(Verdict& v) {
  const auto& s = schedule();
  long double running = 1.0L;
  double worst_schedule = 0.0;
  for (std::int64_t t = 1; t <= 1000; ++t) {
    const long double beta = 1e-4L + (0.02L - 1e-4L) * static_cast<long double>(t - 1) / 999.0L;
    running *= 1.0L - beta;
    worst_schedule = std::max(worst_schedule, std::abs(s.alpha_bar(t) - static_cast<double>(running)));
    if (t > 1) worst_schedule = std::max(worst_schedule, std::abs(s.alpha_bar(t) - s.alpha_bar(t - 1) * s.alpha(t)));
  }
  auto gen = make_generator(11);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> step(1, 1000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = step(rng);
    const auto x0 = torch::rand({3, 4, 4}, gen, torch::kFloat64) * 2 - 1;
    const auto eps = torch::randn({3, 4, 4}, gen, torch::kFloat64);
    const auto x_t = diffusion::forward_marginal_sample(x0, t, eps, s);
    const auto gap = diffusion::posterior_mean_from_eps(x_t, t, eps, s) - diffusion::posterior_params(x_t, x0, t, s).mean;
    worst = std::max(worst, gap.abs().max().item<double>());
  }
  v.expect(worst_schedule < 1e-12, "schedule recurrence");
  v.expect(worst < 1e-6, "posterior identity");
  v.detail << "identity max err " << std::scientific << std::setprecision(2) << worst << ", schedule max err "
           << worst_schedule << std::defaultfloat << ' ';
}

// 2. Monte-Carlo mean and variance of x_t at t = 1, T/2, T.
void forward_marginals(Verdict& v) {
  const auto& s = schedule();
  const std::int64_t n = 10000;
  const double x0_value = 0.7;
  auto gen = make_generator(5);
  for (std::int64_t t : {std::int64_t{1}, std::int64_t{500}, std::int64_t{1000}}) {
    const auto x0 = torch::full({n}, x0_value, torch::kFloat64);
    const auto x_t = diffusion::forward_marginal_sample(x0, t, torch::randn({n}, gen, torch::kFloat64), s);
    const double ab = s.alpha_bar(t), var = 1.0 - ab;
    const double mean_z = std::abs(x_t.mean().item<double>() - std::sqrt(ab) * x0_value) / std::sqrt(var / n);
    const double var_z = std::abs(x_t.var().item<double>() - var) / (var * std::sqrt(2.0 / (n - 1)));
    v.expect(mean_z < 3.0, "mean at t=" + std::to_string(t));
    v.expect(var_z < 3.0, "variance at t=" + std::to_string(t));
    v.detail << "t=" << t << " |z| mean " << std::setprecision(2) << mean_z << " var " << var_z << "; ";
  }
}

// 3. Full reverse chain with the true-noise predictor on 10 faces.
void oracle_chain(Verdict& v) {
  std::vector<torch::Tensor> raw, retouched;
  for (int i = 0; i < 10; ++i) {
    const auto face = data::render_synthetic_face(500 + static_cast<std::uint64_t>(i), 32).image;
    raw.push_back(to_model_space(face));
    retouched.push_back(to_model_space(data::synthetic_retouch(face, data::default_retouch_spec(), 7)));
  }
  const auto x0 = torch::stack(raw), y0 = torch::stack(retouched);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 10; ++i) seeds.push_back(100 + i);
  const auto out = diffusion::sample_conditional(testing::oracle_predictor(y0, x0, schedule()), y0, schedule(), seeds);
  double lowest = std::numeric_limits<double>::infinity();
  int recovered = 0;
  for (int i = 0; i < 10; ++i) {
    const double p = metrics::psnr(to_file_space(out[i]), to_file_space(x0[i]));
    lowest = std::min(lowest, p);
    recovered += p >= 30.0 ? 1 : 0;
  }
  v.expect(recovered == 10, "PSNR >= 30 dB on every image");
  v.detail << recovered << "/10 images >= 30 dB, lowest " << std::setprecision(4) << lowest << " dB ";
}

// 4. Central-difference gradient checks on small configurations.
void gradient_checks(Verdict& v) {
  denoiser::DenoiserConfig dc;
  dc.working_resolution = 8;
  dc.base_channels = 8;
  dc.channel_multipliers = {1, 2};
  dc.time_embed_dim = 16;
  dc.attention_levels = {1};
  dc.res_blocks_per_level = 1;
  dc.norm_groups = 4;
  auto unet = denoiser::init_denoiser(dc, 1);
  auto& net = unet.model();
  net->to(torch::kFloat64);
  auto gen = make_generator(2);
  {
    torch::NoGradGuard g;
    for (auto& p : net->parameters()) p.add_(torch::randn(p.sizes(), gen, p.options()) * 0.1);
  }
  const auto x = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  const auto y = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  const auto t = torch::tensor({3, 700}, torch::kLong);
  const auto w = torch::randn({2, 3, 8, 8}, gen, torch::kFloat64);
  const double unet_err = testing::worst_gradient_error(*net, [&] { return (net->forward(x, t, y) * w).sum(); });

  sr::SRConfig sc;
  sc.upscale = 2;
  sc.embed_dim = 8;
  sc.num_heads = 2;
  sc.num_hab_per_group = 2;
  sc.num_groups = 1;
  sc.window_size = 4;
  sc.ca_compress = 2;
  sc.ca_squeeze = 4;
  auto srk = sr::init_sr(sc, 1);
  auto& srn = srk.model();
  srn->to(torch::kFloat64);
  {
    torch::NoGradGuard g;
    for (auto& p : srn->parameters()) p.copy_(torch::randn(p.sizes(), gen, p.options()) * 0.3);
  }
  const auto lr = torch::randn({1, 3, 8, 8}, gen, torch::kFloat64);
  const auto sw = torch::randn({1, 3, 16, 16}, gen, torch::kFloat64);
  const double sr_err = testing::worst_gradient_error(*srn, [&] { return (srn->forward(lr) * sw).sum(); });
  v.expect(unet_err < 1e-3, "denoiser gradients");
  v.expect(sr_err < 1e-3, "SR gradients");
  v.detail << "worst relative error: denoiser " << std::scientific << std::setprecision(2) << unet_err << ", SR "
           << sr_err << std::defaultfloat << ' ';
}

// 5. Exact residual identities and the sub-pixel enumeration.
void residual_identities(Verdict& v) {
  auto gen = make_generator(11);
  {
    sr::HybridAttentionBlock block(8, 2, 4, 2, 2.0, 2, 4);
    torch::NoGradGuard g;
    for (auto* lin : {&block->attn->proj, &block->mlp->fc2}) {
      (*lin)->weight.zero_();
      (*lin)->bias.zero_();
    }
    block->cab->conv2->weight.zero_();
    block->cab->conv2->bias.zero_();
    const auto x = torch::randn({2, 8, 8, 8}, gen);
    v.expect(block->forward(x, 0.01).equal(x), "HAB");
  }
  {
    sr::OverlapCrossAttention ocab(8, 2, 4, 6, 2.0);
    torch::NoGradGuard g;
    ocab->proj->weight.zero_();
    ocab->proj->bias.zero_();
    ocab->mlp->fc2->weight.zero_();
    ocab->mlp->fc2->bias.zero_();
    const auto x = torch::randn({1, 8, 12, 8}, gen);
    v.expect(ocab->forward(x).equal(x), "OCAB");
  }
  sr::SRConfig sc;
  sc.embed_dim = 8;
  sc.num_heads = 2;
  sc.window_size = 4;
  sc.ca_compress = 2;
  sc.ca_squeeze = 4;
  sr::HybridAttentionSR net(sc);
  {
    torch::NoGradGuard g;
    const auto x = torch::randn({1, 8, 8, 8}, gen);
    auto group = net->group(0);
    group->conv->weight.zero_();
    group->conv->bias.zero_();
    v.expect(group->forward(x, 0.01).equal(x), "RHA group");
    net->conv_after_body->weight.zero_();
    net->conv_after_body->bias.zero_();
    v.expect(net->trunk(x).equal(x), "SR trunk");
  }
  const auto r = sc.upscale;
  {
    torch::NoGradGuard g;
    net->conv_last->weight.zero_();
    net->conv_last->bias.copy_(torch::arange(3 * r * r, torch::kFloat32));
    const auto f = torch::zeros({1, 8, 3, 5});
    const auto out = net->reconstruct(f, f);
    auto expected = torch::empty({1, 3, 3 * r, 5 * r});
    for (std::int64_t c = 0; c < 3; ++c) {
      for (std::int64_t y = 0; y < 3 * r; ++y) {
        for (std::int64_t x = 0; x < 5 * r; ++x) expected[0][c][y][x] = static_cast<float>(c * r * r + (y % r) * r + x % r);
      }
    }
    v.expect(out.equal(expected), "pixel-shuffle enumeration");
  }
  v.detail << "HAB, OCAB, group, trunk identities; x" << r << " shuffle map ";
}

// 6. Golden metric values.
void metric_goldens(Verdict& v) {
  const auto a = torch::full({3, 32, 32}, 100.0);
  const double p = metrics::psnr(a, a + 16.0);
  v.expect(std::abs(p - 24.05) <= 0.01, "PSNR of a uniform 16 offset");
  auto gen = make_generator(4);
  const auto img = torch::randint(0, 256, {3, 32, 32}, gen, torch::kFloat32);
  const double self = metrics::ssim(img, img);
  v.expect(std::abs(self - 1.0) <= 1e-9, "SSIM(x, x)");
  const double h = 0.05;
  const auto curve = metrics::similarity_density({0.8, 0.9}, h);
  double worst = 0.0;
  for (const auto& pt : curve) {
    const double u0 = (pt.score - 0.8) / h, u1 = (pt.score - 0.9) / h;
    const double expected = (std::exp(-0.5 * u0 * u0) + std::exp(-0.5 * u1 * u1)) / (2 * h * std::sqrt(2 * std::numbers::pi));
    worst = std::max(worst, std::abs(pt.density - expected));
  }
  v.expect(worst <= 1e-9, "KDE closed form");
  v.detail << "PSNR " << std::setprecision(6) << p << " dB, SSIM(x,x) " << self << ", KDE max err " << std::scientific
           << std::setprecision(2) << worst << std::defaultfloat << ' ';
}

// 7. Train on 64 simulator pairs at 32 x 32 and compare the de-retouched
// stage-1 output with the raw-vs-retouched baseline on the 16 held-out pairs.
void directional_check(Verdict& v, const fs::path& root) {
  data::write_synthetic_faces(root / "faces", 80, 1000, 128);
  pipeline::RunConfig cfg = pipeline::RunConfig::desk();
  cfg.artifacts_dir = root / "artifacts";
  cfg.run_id = "directional";
  data::BuildOptions build;
  build.source_dir = root / "faces";
  build.split_ratio = 0.8;
  cfg.dataset.build = build;
  cfg.stage2.iterations = 0;
  const auto manifest_path = pipeline::cmd_build_dataset(cfg);
  const auto manifest = data::load_manifest(manifest_path);
  v.expect(manifest.count(data::Split::train) == 64 && manifest.count(data::Split::test) == 16, "64/16 split");
  const auto steps_start = Clock::now();
  pipeline::cmd_train_stage1(cfg);
  const double train_s = std::chrono::duration<double>(Clock::now() - steps_start).count();
  const auto inferred = pipeline::cmd_infer(cfg);
  v.expect(inferred.run.failures.empty() && inferred.run.outputs.size() == 16, "inference on all 16 held-out pairs");
  const auto eval = pipeline::cmd_evaluate(cfg, inferred.dir / "stage1", cfg.denoiser.working_resolution);
  const double model = eval.candidate.aggregate.ssim, baseline = eval.baseline.aggregate.ssim;
  v.expect(eval.candidate.aggregate.count == 16, "16 scored pairs");
  v.expect(model > baseline, "de-retouched SSIM above the raw-vs-retouched baseline");
  v.detail << "mean SSIM at 32x32: de-retouched " << std::setprecision(4) << model << " vs retouched " << baseline
           << " (" << cfg.stage1.iterations << " steps in " << std::setprecision(1) << std::fixed << train_s << " s) "
           << std::defaultfloat;
}

// 8. Split exactness, level-0 identity, manifest byte round trip.
void dataset_protocol(Verdict& v, const fs::path& root) {
  auto train_count = [](const std::vector<data::Split>& s) { return std::count(s.begin(), s.end(), data::Split::train); };
  v.expect(train_count(data::assign_split(50000, 0.8, 1)) == 40000, "8:2 split of 50000");
  v.expect(train_count(data::assign_split(80, 0.8, 1)) == 64, "8:2 split of 80");
  const auto face = data::render_synthetic_face(3, 64).image;
  for (auto op : data::kAllRetouchOps) {
    v.expect(data::synthetic_retouch(face, {{op, 0}}, 1).equal(face), "level 0 of " + std::string(data::to_string(op)));
  }
  data::write_synthetic_faces(root / "faces", 10, 40, 32);
  data::BuildOptions o;
  o.source_dir = root / "faces";
  o.out_dir = root / "dataset";
  const auto built = data::build_dataset(o);
  const auto path = root / "dataset" / data::kManifestFileName;
  const auto bytes = read_bytes(path);
  const auto text = std::string(bytes.begin(), bytes.end());
  v.expect(data::serialize_manifest(data::parse_manifest(text, root / "dataset")) == text, "manifest text round trip");
  data::save_manifest(root / "copy.jsonl", data::load_manifest(path));
  v.expect(read_bytes(root / "copy.jsonl") == bytes, "manifest file round trip");
  v.detail << "50000 -> 40000/10000, 80 -> 64/16, six ops at level 0, " << built.entries.size() << "-entry manifest ";
}

// 9. Byte-identical repeated inference and both resolution chains.
void reproducibility(Verdict& v, const fs::path& root) {
  data::write_synthetic_faces(root / "faces", 6, 2000, 128);
  pipeline::RunConfig cfg = pipeline::RunConfig::desk();
  cfg.artifacts_dir = root / "artifacts";
  cfg.run_id = "repro";
  data::BuildOptions build;
  build.source_dir = root / "faces";
  cfg.dataset.build = build;
  cfg.stage1.iterations = 10;
  cfg.stage1.checkpoint_interval = 10;
  cfg.stage2.iterations = 4;
  cfg.stage2.batch_size = 2;
  cfg.stage2.checkpoint_interval = 4;
  cfg.dataset.split = data::Split::train;
  pipeline::cmd_build_dataset(cfg);
  pipeline::cmd_train_stage1(cfg);
  pipeline::cmd_train_stage2(cfg);
  const auto first = pipeline::cmd_infer(cfg);
  const auto second = pipeline::cmd_infer(cfg);
  v.expect(first.dir != second.dir, "separate output directories");
  std::size_t compared = 0;
  for (const auto& sub : {"stage1", "final"}) {
    for (const auto& out : first.run.outputs) {
      const auto name = out.id + ".png";
      v.expect(read_bytes(first.dir / sub / name) == read_bytes(second.dir / sub / name), std::string(sub) + "/" + name);
      ++compared;
    }
  }
  const auto& o = first.run.outputs.front();
  v.expect(o.stage1.sizes() == torch::IntArrayRef({3, 32, 32}), "stage 1 at 32");
  v.expect(o.final.sizes() == torch::IntArrayRef({3, 128, 128}), "32 -> 128");

  // 128 -> 512 with the desk SR trunk behind a shape-preserving predictor.
  const diffusion::EpsPredictor zero = [](const torch::Tensor& x, const torch::Tensor&, const torch::Tensor&) {
    return torch::zeros_like(x);
  };
  const auto backend = sr::make_sr_backend("hat", sr::BackendArgs{sr::SRConfig::desk(), std::nullopt, 0});
  const auto big = pipeline::run_two_stage({{"large", data::render_synthetic_face(9, 128).image}}, zero, schedule(),
                                           *backend, 128, 0, 1);
  v.expect(big.failures.empty() && big.outputs.size() == 1, "128 input accepted");
  if (!big.outputs.empty()) {
    v.expect(big.outputs[0].stage1.sizes() == torch::IntArrayRef({3, 128, 128}), "stage 1 at 128");
    v.expect(big.outputs[0].final.sizes() == torch::IntArrayRef({3, 512, 512}), "128 -> 512");
  }
  v.detail << compared << " files byte-identical across two runs; 32->128 and 128->512 shapes hold ";
}

}  // namespace

int main() {
  const auto root = testing::scratch_dir("acceptance");
  bool ok = true;
  ok &= run_criterion(1, 10, diffusion_algebra);
  ok &= run_criterion(2, 60, forward_marginals);
  ok &= run_criterion(3, 300, oracle_chain);
  ok &= run_criterion(4, 120, gradient_checks);
  ok &= run_criterion(5, 60, residual_identities);
  ok &= run_criterion(6, 60, metric_goldens);
  ok &= run_criterion(7, 1800, [&](Verdict& v) { directional_check(v, root / "c7"); });
  ok &= run_criterion(8, 120, [&](Verdict& v) { dataset_protocol(v, root / "c8"); });
  ok &= run_criterion(9, 600, [&](Verdict& v) { reproducibility(v, root / "c9"); });
  return ok ? 0 : 1;
}
