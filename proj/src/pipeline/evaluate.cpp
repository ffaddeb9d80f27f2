// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <spdlog/spdlog.h>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/data/loader.hpp"
#include "frr/data/resample.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/run.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

// Reference images are brought to the scoring side in file space so that
// PNG copies of them compare exactly.
torch::Tensor at_side(const torch::Tensor& file_space, std::int64_t side) {
  if (file_space.size(1) == side && file_space.size(2) == side) return file_space;
  return quantize_8bit(data::resize_bicubic(file_space, side, side));
}

nlohmann::json aggregate_json(const metrics::MetricsReport& r) { return metrics::report_json(r).at("aggregate"); }

}  // namespace

EvaluateResult cmd_evaluate(const RunConfig& config, const fs::path& candidate_dir, std::int64_t resolution) {
  validate_config(config, true);
  if (!fs::is_directory(candidate_dir)) throw ConfigError("candidate directory " + candidate_dir.string() + " does not exist");
  if (resolution < 0) throw ConfigError("evaluation resolution must be positive");
  RunContext ctx(config, "evaluate");
  EvaluateResult result;
  result.resolution = resolution == 0 ? config.eval_resolution() : resolution;
  const auto side = result.resolution;

  const auto manifest = data::load_manifest(ctx.manifest_path());
  std::vector<metrics::ImagePair> candidates, baseline;
  std::vector<metrics::PairFailure> missing;
  for (const auto* e : manifest.split(config.dataset.split)) {
    const auto raw = at_side(data::read_verified(manifest, e->raw_path, e->raw_sha256), side);
    const auto retouched = at_side(data::read_verified(manifest, e->retouched_path, e->retouched_sha256), side);
    baseline.push_back({e->id, raw, retouched});
    const auto path = candidate_dir / (e->id + ".png");
    if (!fs::exists(path)) {
      missing.push_back({e->id, "no candidate image " + path.string()});
      continue;
    }
    try {
      const auto cand = read_image(path);
      if (cand.size(1) != side || cand.size(2) != side) {
        throw ShapeError("candidate '" + e->id + "' is " + std::to_string(cand.size(2)) + "x" +
                         std::to_string(cand.size(1)) + ", expected " + std::to_string(side) + "x" + std::to_string(side));
      }
      candidates.push_back({e->id, raw, cand});
    } catch (const Error& err) {
      missing.push_back({e->id, std::string(err.kind()) + ": " + err.what()});
    }
  }
  if (baseline.empty()) throw InvalidArgument("the " + std::string(data::to_string(config.dataset.split)) + " split is empty");
  if (candidates.empty()) throw InvalidArgument("no usable candidate images in " + candidate_dir.string());

  const auto embedders = make_embedders(config.eval.embedders);
  result.candidate = metrics::evaluate_pairs(candidates, embedders);
  result.baseline = metrics::evaluate_pairs(baseline, embedders);
  auto& failures = result.candidate.failures;
  failures.insert(failures.end(), missing.begin(), missing.end());
  std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  result.dir = ctx.next_numbered_dir("eval");
  metrics::write_report(result.dir / "candidate.tsv", result.dir / "candidate.json", result.candidate);
  metrics::write_report(result.dir / "baseline.tsv", result.dir / "baseline.json", result.baseline);
  std::map<std::string, std::vector<metrics::DensityPoint>> series;
  for (const auto& [name, curve] : result.candidate.density) series[name + " candidate"] = curve;
  for (const auto& [name, curve] : result.baseline.density) series[name + " raw-vs-retouched"] = curve;
  if (!series.empty()) metrics::render_density_plot(series, result.dir / "density.png");
  const nlohmann::json summary = {{"candidate_dir", fs::absolute(candidate_dir).string()},
                                  {"split", data::to_string(config.dataset.split)},
                                  {"resolution", side},
                                  {"candidate", aggregate_json(result.candidate)},
                                  {"baseline", aggregate_json(result.baseline)},
                                  {"candidate_failures", result.candidate.failures.size()}};
  write_text_atomic(result.dir / "summary.json", summary.dump(2) + "\n");
  ctx.record({{"event", "evaluation"}, {"dir", result.dir.string()}, {"summary", summary}});
  spdlog::info("evaluate: candidate SSIM {:.4f} PSNR {:.3f} | raw-vs-retouched SSIM {:.4f} PSNR {:.3f} ({} pairs)",
               result.candidate.aggregate.ssim, result.candidate.aggregate.psnr, result.baseline.aggregate.ssim,
               result.baseline.aggregate.psnr, result.candidate.aggregate.count);
  return result;
}

}  // namespace frr::pipeline
