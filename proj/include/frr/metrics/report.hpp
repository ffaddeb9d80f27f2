// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "frr/metrics/density.hpp"
#include "frr/metrics/embedding.hpp"

namespace frr::metrics {

/// A reference image and the image judged against it, both 3 x H x W file space.
struct ImagePair {
  std::string id;
  torch::Tensor raw;
  torch::Tensor candidate;
};

struct PairMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  std::map<std::string, double> embed_sim;
};

struct PairFailure {
  std::string id;
  std::string error;
};

struct AggregateMetrics {
  std::size_t count = 0;
  double psnr = 0.0;  // +inf if any pair is identical
  double ssim = 0.0;
  std::map<std::string, double> embed_sim;
};

struct MetricsReport {
  std::vector<PairMetrics> per_pair;  // sorted by id
  AggregateMetrics aggregate;
  std::vector<PairFailure> failures;
  std::map<std::string, std::vector<DensityPoint>> density;  // per embedder
};

using EmbedderList = std::vector<std::shared_ptr<const Embedder>>;

/// Scores every pair. A pair that throws is recorded in `failures` and left
/// out of the aggregate. Density curves are fitted per embedder when at
/// least two finite scores exist.
MetricsReport evaluate_pairs(const std::vector<ImagePair>& pairs, const EmbedderList& embedders,
                             bool with_density = true);

/// One pair per line: id, psnr, ssim, then one column per embedder.
std::string report_table(const MetricsReport& report);
/// Aggregates, per-pair rows, failures and density samples. Infinite PSNR is
/// written as the string "inf".
nlohmann::json report_json(const MetricsReport& report);
void write_report(const std::filesystem::path& table_path, const std::filesystem::path& json_path,
                  const MetricsReport& report);

/// Draws labelled density curves (one colour per series) to a PNG.
void render_density_plot(const std::map<std::string, std::vector<DensityPoint>>& series,
                         const std::filesystem::path& path, int width = 640, int height = 400);

}  // namespace frr::metrics
