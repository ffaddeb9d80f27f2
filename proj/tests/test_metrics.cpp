// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/metrics/density.hpp"
#include "frr/metrics/embedding.hpp"
#include "frr/metrics/quality.hpp"
#include "frr/metrics/report.hpp"
#include "support.hpp"

using namespace frr;
using namespace frr::metrics;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

torch::Tensor random_image(std::uint64_t seed, std::int64_t side = 24) {
  auto gen = make_generator(seed);
  return torch::randint(0, 256, {3, side, side}, gen, torch::kFloat32);
}

// Loop-based mean SSIM of one channel with an explicitly built Gaussian.
double naive_ssim(const torch::Tensor& a, const torch::Tensor& b, int win, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(win));
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
    gs += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= gs;
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  const auto A = a.to(torch::kFloat64).contiguous(), B = b.to(torch::kFloat64).contiguous();
  auto pa = A.accessor<double, 2>();
  auto pb = B.accessor<double, 2>();
  const auto h = A.size(0), w = A.size(1);
  double total = 0.0;
  int count = 0;
  for (std::int64_t y = 0; y + win <= h; ++y) {
    for (std::int64_t x = 0; x + win <= w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double k = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)];
          const double va = pa[y + i][x + j], vb = pb[y + i][x + j];
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

}  // namespace

TEST_CASE("psnr of a uniform offset", "[metrics][psnr]") {
  const auto a = torch::full({3, 16, 16}, 100.0);
  const double expected = 10.0 * std::log10(255.0 * 255.0 / 256.0);
  CHECK_THAT(psnr(a, a + 16.0), WithinAbs(expected, 1e-9));
  CHECK_THAT(psnr(a, a + 16.0), WithinAbs(24.05, 0.005));
  CHECK(psnr(a, a) == kPsnrIdentical);
  CHECK_THAT(psnr(a / 255.0, (a + 16.0) / 255.0, 1.0), WithinAbs(expected, 1e-6));
  CHECK_THROWS_AS(psnr(a, torch::zeros({3, 8, 8})), ShapeError);
}

TEST_CASE("ssim matches a direct windowed computation", "[metrics][ssim]") {
  const auto a = random_image(1, 20), b = (a * 0.7 + random_image(2, 20) * 0.3).round();
  double expected = 0.0;
  for (int c = 0; c < 3; ++c) expected += naive_ssim(a[c], b[c], 11, 1.5) / 3.0;
  CHECK_THAT(ssim(a, b), WithinAbs(expected, 1e-9));
  CHECK_THAT(ssim(a, a), WithinAbs(1.0, 1e-9));
  CHECK_THAT(ssim(a.unsqueeze(0).repeat({2, 1, 1, 1}), b.unsqueeze(0).repeat({2, 1, 1, 1})), WithinAbs(expected, 1e-9));
  CHECK_THROWS_AS(ssim(torch::zeros({3, 8, 8}), torch::zeros({3, 8, 8})), InvalidArgument);
}

TEST_CASE("ssim of flat images reduces to the luminance term", "[metrics][ssim]") {
  const double ma = 80.0, mb = 120.0, c1 = std::pow(0.01 * 255, 2);
  const double expected = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  CHECK_THAT(ssim(torch::full({3, 16, 16}, ma), torch::full({3, 16, 16}, mb)), WithinAbs(expected, 1e-9));
}

TEST_CASE("gaussian window is normalized and symmetric", "[metrics][ssim]") {
  const auto g = gaussian_window(11, 1.5);
  CHECK(g.sizes() == torch::IntArrayRef({11, 11}));
  CHECK_THAT(g.sum().item<double>(), WithinAbs(1.0, 1e-12));
  CHECK(g.allclose(g.t()));
  CHECK(g.allclose(g.flip({0})));
  CHECK_THAT(g[5][5].item<double>() / g[5][6].item<double>(), WithinRel(std::exp(1.0 / (2 * 2.25)), 1e-12));
}

TEST_CASE("kde of two points has the closed form", "[metrics][density]") {
  const double h = 0.25;
  const auto curve = similarity_density({0.0, 1.0}, h, 101);
  REQUIRE(curve.size() == 101);
  CHECK_THAT(curve.front().score, WithinAbs(-3 * h, 1e-12));
  CHECK_THAT(curve.back().score, WithinAbs(1 + 3 * h, 1e-12));
  for (const auto& p : curve) {
    const double x = p.score;
    const double expected =
        (std::exp(-x * x / (2 * h * h)) + std::exp(-(x - 1) * (x - 1) / (2 * h * h))) / (2 * h * std::sqrt(2 * std::numbers::pi));
    REQUIRE_THAT(p.density, WithinAbs(expected, 1e-9));
  }
  // Each kernel loses about 0.135% per tail outside three bandwidths.
  CHECK_THAT(integrate_density(curve), WithinAbs(0.99730, 2e-3));
}

TEST_CASE("silverman bandwidth and its fallbacks", "[metrics][density]") {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const double sd = std::sqrt(82.5 / 9.0);
  const double iqr = 7.75 - 3.25;  // type-7 quartiles of 1..10
  CHECK_THAT(silverman_bandwidth(xs), WithinAbs(0.9 * std::min(sd, iqr / 1.34) * std::pow(10.0, -0.2), 1e-12));
  // IQR of zero falls back to the standard deviation.
  const std::vector<double> spiky{0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  const double sd2 = std::sqrt((0.9 * 0.1 * 10) / 9.0);
  CHECK_THAT(silverman_bandwidth(spiky), WithinAbs(0.9 * sd2 * std::pow(10.0, -0.2), 1e-12));
  CHECK_THAT(silverman_bandwidth({0.5, 0.5}), WithinAbs(0.9 * 0.5 * std::pow(2.0, -0.2), 1e-12));
  CHECK_THAT(silverman_bandwidth({0.0, 0.0}), WithinAbs(0.9 * std::pow(2.0, -0.2), 1e-12));
  CHECK_THROWS_AS(similarity_density({0.3}), InvalidArgument);
  CHECK_THROWS_AS(similarity_density({0.3, NAN}), InvalidArgument);
  CHECK_THROWS_AS(similarity_density({0.3, 0.4}, -1.0), InvalidArgument);
}

TEST_CASE("random projection embedder", "[metrics][embedding]") {
  const RandomProjectionEmbedder e("rp", 32, 8, 7);
  const auto img = random_image(3, 8);
  const auto v = e.embed(img);
  CHECK(v.dtype() == torch::kFloat64);
  CHECK_THAT(v.norm().item<double>(), WithinAbs(1.0, 1e-12));
  // At the native side the embedding is the normalized projection of the pixels.
  auto manual = (img.to(torch::kFloat64) / 127.5 - 1.0).flatten().matmul(e.projection());
  manual = manual / manual.norm();
  CHECK(v.allclose(manual, 1e-6, 1e-6));
  CHECK(RandomProjectionEmbedder("rp", 32, 8, 7).projection().equal(e.projection()));
  CHECK(!RandomProjectionEmbedder("rp", 32, 8, 8).projection().equal(e.projection()));
  CHECK_THAT(embedding_similarity(e, img, img), WithinAbs(1.0, 1e-12));
  CHECK(embedding_similarity(e, img, random_image(4, 8)) < 0.9);
  CHECK_THROWS_AS(e.embed(torch::full({3, 8, 8}, 127.5)), NumericError);
  const CallableEmbedder c("sum", [](const torch::Tensor& x) { return x.sum({1, 2}); });
  CHECK(c.embed(torch::ones({3, 4, 4})).allclose(torch::full({3}, 1.0 / std::sqrt(3.0), torch::kFloat64)));
}

TEST_CASE("pairwise report aggregates, records failures and serializes", "[metrics][report]") {
  const auto a = random_image(5), b = random_image(6), c = random_image(7);
  std::vector<ImagePair> pairs{{"b", b, b}, {"a", a, c}, {"bad", a, torch::zeros({3, 12, 12})}};
  const EmbedderList embedders{std::make_shared<RandomProjectionEmbedder>("rp", 16, 8, 1)};
  const auto report = evaluate_pairs(pairs, embedders);
  REQUIRE(report.per_pair.size() == 2);
  CHECK(report.per_pair[0].id == "a");
  CHECK(report.per_pair[1].id == "b");
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == "bad");
  CHECK(report.aggregate.count == 2);
  CHECK(std::isinf(report.aggregate.psnr));
  CHECK_THAT(report.aggregate.ssim, WithinAbs((ssim(a, c) + 1.0) / 2.0, 1e-12));
  CHECK_THAT(report.aggregate.embed_sim.at("rp"),
             WithinAbs((embedding_similarity(*embedders[0], a, c) + 1.0) / 2.0, 1e-12));
  CHECK(report.density.at("rp").size() == static_cast<std::size_t>(kDensityGridPoints));

  const auto j = report_json(report);
  CHECK(j["aggregate"]["psnr"] == "inf");
  CHECK(j["per_pair"][1]["psnr"] == "inf");
  CHECK(j["failure_count"] == 1);
  const auto reparsed = nlohmann::json::parse(j.dump());
  CHECK(reparsed == j);
  const auto table = report_table(report);
  CHECK(table.rfind("id\tpsnr\tssim\trp\n", 0) == 0);
  CHECK(table.find("\nb\tinf\t") != std::string::npos);

  const auto dir = testing::scratch_dir("metrics_report");
  write_report(dir / "r.tsv", dir / "r.json", report);
  CHECK(read_bytes(dir / "r.tsv").size() == table.size());
  render_density_plot(report.density, dir / "d.png");
  const auto plot = read_image(dir / "d.png");
  CHECK(plot.sizes() == torch::IntArrayRef({3, 400, 640}));
}
