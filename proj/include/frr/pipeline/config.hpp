// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a single versioned JSON document. Relative paths are
// resolved against the directory of the file they were read from.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "frr/data/builder.hpp"
#include "frr/data/manifest.hpp"
#include "frr/denoiser/config.hpp"
#include "frr/diffusion/process.hpp"
#include "frr/diffusion/schedule.hpp"
#include "frr/metrics/report.hpp"
#include "frr/sr/config.hpp"

namespace frr::pipeline {

inline constexpr int kConfigFormatVersion = 1;

struct DatasetSection {
  /// Manifest used by every command after build-dataset. Empty means
  /// <run dir>/dataset/manifest.jsonl.
  std::filesystem::path manifest;
  /// Split that infer and evaluate operate on.
  data::Split split = data::Split::test;
  /// Inputs of build-dataset. An empty out_dir means <run dir>/dataset.
  std::optional<data::BuildOptions> build;
};

struct StageTraining {
  std::int64_t iterations = 2000;
  std::int64_t batch_size = 8;
  double learning_rate = 2e-4;
  std::int64_t checkpoint_interval = 100;
  /// Most recent checkpoints kept on disk per stage.
  std::int64_t keep_checkpoints = 2;
  /// Decay of the parameter moving average used at inference; 0 disables it.
  double ema_decay = 0.995;

  bool operator==(const StageTraining&) const = default;
};

/// One similarity embedder. kind "random_projection" is built in;
/// kind "torchscript" loads an exported network from `path`.
struct EmbedderSpec {
  std::string name = "randproj";
  std::string kind = "random_projection";
  std::int64_t dim = 128;
  std::int64_t side = 16;
  std::uint64_t seed = 0;
  std::filesystem::path path;
  std::int64_t input_size = 224;
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  bool operator==(const EmbedderSpec&) const = default;
};

struct EvalSection {
  std::vector<EmbedderSpec> embedders{EmbedderSpec{}};
  /// Side of the images scored; 0 means working_resolution x upscale, any
  /// other value must equal that product.
  std::int64_t resolution = 0;
};

struct RunConfig {
  int format_version = kConfigFormatVersion;
  std::string run_id = "desk";
  std::uint64_t seed = 0;
  std::filesystem::path artifacts_dir = "artifacts";
  DatasetSection dataset;
  diffusion::ScheduleSpec schedule;
  denoiser::DenoiserConfig denoiser = denoiser::DenoiserConfig::desk();
  std::string sr_backend = "hat";
  sr::SRConfig sr = sr::SRConfig::desk();
  StageTraining stage1;
  StageTraining stage2{200, 4, 2e-4, 100, 2, 0.0};
  diffusion::SamplerOptions sampler;
  /// Images per batched reverse chain at inference.
  std::int64_t infer_batch = 8;
  EvalSection eval;

  std::int64_t eval_resolution() const { return denoiser.working_resolution * sr.upscale; }

  /// Desk defaults: 32 x 32 working resolution, T = 1000, batch 8.
  static RunConfig desk();
  /// 128 x 128 working resolution, 512 x 512 outputs, 1,500,000 stage-1
  /// iterations. Valid, not exercised by the tests.
  static RunConfig paper_scale();
};

void to_json(nlohmann::json& j, const EmbedderSpec& e);
void from_json(const nlohmann::json& j, EmbedderSpec& e);
void to_json(nlohmann::json& j, const StageTraining& s);
void from_json(const nlohmann::json& j, StageTraining& s);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Throws ConfigError (or InvalidArgument from the nested configs) on any
/// violated invariant, including an unregistered SR backend. With
/// require_manifest the dataset manifest must exist.
void validate_config(const RunConfig& config, bool require_manifest);

/// Parses and resolves relative paths against the file's directory. Does
/// not validate.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
std::string serialize_config(const RunConfig& config);

/// Instantiates the configured embedders.
metrics::EmbedderList make_embedders(const std::vector<EmbedderSpec>& specs);

}  // namespace frr::pipeline
