// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "frr/diffusion/process.hpp"
#include "frr/metrics/report.hpp"
#include "frr/pipeline/config.hpp"
#include "frr/sr/backend.hpp"

namespace frr::pipeline {

// ---- dataset ---------------------------------------------------------------

/// Builds the dataset described by config.dataset.build (out_dir defaults to
/// <run dir>/dataset) and returns the manifest path.
std::filesystem::path cmd_build_dataset(const RunConfig& config);

// ---- training --------------------------------------------------------------

struct TrainOptions {
  /// Continue from the newest compatible checkpoint. Without it a stage
  /// that already has checkpoints is refused.
  bool resume = false;
  /// Stop after this many steps in this call (-1: run to the configured
  /// iteration count). Simulates an interrupted run.
  std::int64_t max_steps = -1;
};

/// Runs the noise-prediction objective over the train split. Step k draws its
/// batch indices and noise from seeds derived from (run seed, k), so an
/// interrupted and resumed run is bitwise identical to an uninterrupted one.
/// Returns the newest checkpoint path.
std::filesystem::path cmd_train_stage1(const RunConfig& config, const TrainOptions& options = {});

/// Fine-tunes the SR generator on (raw at working resolution, raw at eval
/// resolution) pairs. Back-ends without parameters have nothing to train and
/// return nullopt.
std::optional<std::filesystem::path> cmd_train_stage2(const RunConfig& config, const TrainOptions& options = {});

/// Newest ckpt_<step>.frr in `dir`, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);

// ---- inference -------------------------------------------------------------

struct InferenceImage {
  std::string id;
  torch::Tensor image;  // 3 x H x W file space, any square size >= working
};

struct InferenceOutput {
  std::string id;
  torch::Tensor stage1;  // 3 x R x R file space, 8-bit values
  torch::Tensor final;   // 3 x (rR) x (rR) file space, 8-bit values
};

struct InferenceRun {
  std::vector<InferenceOutput> outputs;  // sorted by id
  std::vector<metrics::PairFailure> failures;
};

/// Per image: bicubic downsampling to the working resolution, the reverse
/// chain with the image as condition and seed stable_hash(run_seed, id), then
/// the SR back-end. Images that violate the resolution contract are reported
/// in `failures`; the others are unaffected. Images are processed in id order,
/// `batch` at a time.
InferenceRun run_two_stage(const std::vector<InferenceImage>& images, const diffusion::EpsPredictor& predictor,
                           const diffusion::NoiseSchedule& schedule, const sr::SRBackend& backend,
                           std::int64_t working_resolution, std::uint64_t run_seed, std::int64_t batch,
                           const diffusion::SamplerOptions& sampler = {});

struct InferResult {
  std::filesystem::path dir;  // holds stage1/ and final/
  InferenceRun run;
};

/// Runs the trained stages on `input_dir` (every image file, id = stem) or,
/// by default, on the retouched images of config.dataset.split. Writes into
/// the next infer/<NNN> directory of the run.
InferResult cmd_infer(const RunConfig& config, const std::optional<std::filesystem::path>& input_dir = std::nullopt);

// ---- evaluation ------------------------------------------------------------

struct EvaluateResult {
  std::filesystem::path dir;
  std::int64_t resolution = 0;
  metrics::MetricsReport candidate;
  metrics::MetricsReport baseline;  // raw vs retouched on the same ids
};

/// Scores <candidate_dir>/<id>.png against the raw image of every entry in
/// config.dataset.split, together with the raw-vs-retouched baseline.
/// `resolution` 0 means the configured eval resolution. Missing or
/// wrongly-sized candidates are per-pair failures.
EvaluateResult cmd_evaluate(const RunConfig& config, const std::filesystem::path& candidate_dir,
                            std::int64_t resolution = 0);

// ---- ablation --------------------------------------------------------------

struct AblationRow {
  std::string value;
  RunConfig config;
  metrics::AggregateMetrics candidate;
  metrics::AggregateMetrics baseline;
};

struct AblationResult {
  std::filesystem::path dir;
  std::string axis;
  std::vector<AblationRow> rows;
};

/// axis "downsample": values are working resolutions (the eval resolution
/// follows as working x upscale). axis "sr-backend": values are registered
/// back-end names. Every row is a nested run that trains, infers and
/// evaluates; rows differ from the base config only in the axis field.
AblationResult cmd_ablate(const RunConfig& config, const std::string& axis, const std::vector<std::string>& values);

/// JSON paths (a/b/c) at which two configs differ, run_id excluded.
std::vector<std::string> config_differences(const RunConfig& a, const RunConfig& b);

}  // namespace frr::pipeline
