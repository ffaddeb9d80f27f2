// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "frr/core/error.hpp"
#include "frr/core/hash.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/data/loader.hpp"
#include "frr/data/resample.hpp"
#include "frr/denoiser/checkpoint.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/run.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

struct Prepared {
  std::string id;
  torch::Tensor condition;  // model space, working resolution
};

torch::Tensor to_8bit_file(const torch::Tensor& model_space) {
  return quantize_8bit(to_file_space(model_space.clamp(-1.0, 1.0)));
}

std::vector<InferenceImage> images_from_dir(const fs::path& dir, std::vector<metrics::PairFailure>& failures) {
  if (!fs::is_directory(dir)) throw ConfigError("input directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(dir)) {
    auto ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (de.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp")) {
      files.push_back(de.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<InferenceImage> out;
  for (const auto& f : files) {
    try {
      out.push_back({f.stem().string(), read_image(f)});
    } catch (const Error& e) {
      failures.push_back({f.stem().string(), std::string(e.kind()) + ": " + e.what()});
    }
  }
  return out;
}

std::unique_ptr<sr::SRBackend> load_backend(const RunConfig& config, const RunContext& ctx) {
  sr::BackendArgs args{config.sr, std::nullopt, derive_seed(config.seed, kStage2SeedStream)};
  if (config.sr_backend == "hat") {
    if (auto ckpt = latest_checkpoint(ctx.root() / "stage2")) {
      auto loaded = sr::load_sr_checkpoint(*ckpt, WeightSelection::averaged_if_available);
      if (!(loaded.config() == config.sr)) throw CheckpointError(ckpt->string() + " has a different SR config");
      spdlog::info("infer: SR weights from {}", ckpt->string());
      args.checkpoint = std::move(loaded);
    } else if (config.stage2.iterations > 0) {
      throw ConfigError("run '" + config.run_id + "' has no stage-2 checkpoint; run train-stage2 first");
    } else {
      spdlog::warn("infer: stage 2 is configured with 0 iterations, using initial SR weights");
    }
  }
  return sr::make_sr_backend(config.sr_backend, args);
}

}  // namespace

InferenceRun run_two_stage(const std::vector<InferenceImage>& images, const diffusion::EpsPredictor& predictor,
                           const diffusion::NoiseSchedule& schedule, const sr::SRBackend& backend,
                           std::int64_t working_resolution, std::uint64_t run_seed, std::int64_t batch,
                           const diffusion::SamplerOptions& sampler) {
  require(batch >= 1, "run_two_stage: batch must be at least 1");
  InferenceRun run;
  std::map<std::string, const InferenceImage*> by_id;
  for (const auto& img : images) {
    if (!by_id.emplace(img.id, &img).second) throw InvalidArgument("duplicate inference id '" + img.id + "'");
  }
  std::vector<Prepared> ready;
  for (const auto& [id, img] : by_id) {
    try {
      check_rgb(img->image, "inference input '" + id + "'");
      const auto h = img->image.size(1), w = img->image.size(2);
      if (h != w) {
        throw ShapeError("inference input '" + id + "' is " + std::to_string(w) + "x" + std::to_string(h) +
                         ", expected a square image");
      }
      if (h < working_resolution) {
        throw ShapeError("inference input '" + id + "' is " + std::to_string(h) + " px, below the working resolution " +
                         std::to_string(working_resolution));
      }
      const auto small = quantize_8bit(data::downsample(img->image.to(torch::kFloat32), working_resolution));
      ready.push_back({id, to_model_space(small).clamp(-1.0, 1.0)});
    } catch (const Error& e) {
      run.failures.push_back({id, std::string(e.kind()) + ": " + e.what()});
    }
  }
  const auto expected = working_resolution * backend.upscale();
  for (std::size_t begin = 0; begin < ready.size(); begin += static_cast<std::size_t>(batch)) {
    const auto end = std::min(ready.size(), begin + static_cast<std::size_t>(batch));
    std::vector<torch::Tensor> conds;
    std::vector<std::uint64_t> seeds;
    for (auto i = begin; i < end; ++i) {
      conds.push_back(ready[i].condition);
      seeds.push_back(stable_hash(run_seed, ready[i].id));
    }
    const auto restored = diffusion::sample_conditional(predictor, torch::stack(conds), schedule, seeds, sampler);
    for (auto i = begin; i < end; ++i) {
      const auto& id = ready[i].id;
      try {
        const auto stage1 = to_8bit_file(restored[static_cast<std::int64_t>(i - begin)]);
        torch::Tensor upscaled;
        {
          torch::NoGradGuard no_grad;
          upscaled = backend.upscale_image(to_model_space(stage1));
        }
        if (upscaled.dim() != 3 || upscaled.size(1) != expected || upscaled.size(2) != expected) {
          throw ContractViolation("SR output for '" + id + "' is not " + std::to_string(expected) + "x" +
                                  std::to_string(expected));
        }
        run.outputs.push_back({id, stage1, to_8bit_file(upscaled)});
      } catch (const Error& e) {
        run.failures.push_back({id, std::string(e.kind()) + ": " + e.what()});
      }
    }
  }
  std::sort(run.failures.begin(), run.failures.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return run;
}

InferResult cmd_infer(const RunConfig& config, const std::optional<fs::path>& input_dir) {
  validate_config(config, !input_dir.has_value());
  RunContext ctx(config, "infer");
  const auto stage1_ckpt = latest_checkpoint(ctx.root() / "stage1");
  if (!stage1_ckpt) throw ConfigError("run '" + config.run_id + "' has no stage-1 checkpoint; run train-stage1 first");
  auto ckpt = denoiser::load_checkpoint(*stage1_ckpt, WeightSelection::averaged_if_available);
  if (!(ckpt.schedule() == config.schedule)) {
    throw CheckpointError("schedule fingerprint mismatch: " + stage1_ckpt->string() + " was trained with " +
                          ckpt.schedule().fingerprint() + " but the config has " + config.schedule.fingerprint());
  }
  if (!(ckpt.config() == config.denoiser)) {
    throw CheckpointError(stage1_ckpt->string() + " was trained with a different denoiser config");
  }
  ckpt.model()->eval();
  const auto backend = load_backend(config, ctx);

  std::vector<metrics::PairFailure> read_failures;
  std::vector<InferenceImage> images;
  if (input_dir) {
    images = images_from_dir(*input_dir, read_failures);
  } else {
    const auto manifest = data::load_manifest(ctx.manifest_path());
    for (const auto* e : manifest.split(config.dataset.split)) {
      try {
        images.push_back({e->id, data::read_verified(manifest, e->retouched_path, e->retouched_sha256)});
      } catch (const Error& err) {
        read_failures.push_back({e->id, std::string(err.kind()) + ": " + err.what()});
      }
    }
  }

  spdlog::info("infer: {} images, stage-1 weights from {}", images.size(), stage1_ckpt->string());
  InferResult result;
  result.run = run_two_stage(images, ckpt.predictor(), diffusion::NoiseSchedule(config.schedule), *backend,
                             config.denoiser.working_resolution, config.seed, config.infer_batch, config.sampler);
  result.run.failures.insert(result.run.failures.end(), read_failures.begin(), read_failures.end());
  std::sort(result.run.failures.begin(), result.run.failures.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  result.dir = ctx.next_numbered_dir("infer");
  fs::create_directories(result.dir / "stage1");
  fs::create_directories(result.dir / "final");
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& out : result.run.outputs) {
    write_bytes_atomic(result.dir / "stage1" / (out.id + ".png"), encode_png(out.stage1));
    write_bytes_atomic(result.dir / "final" / (out.id + ".png"), encode_png(out.final));
  }
  for (const auto& f : result.run.failures) {
    failures.push_back({{"id", f.id}, {"error", f.error}});
    spdlog::warn("infer: {} failed: {}", f.id, f.error);
  }
  const nlohmann::json summary = {{"stage1_checkpoint", stage1_ckpt->string()},
                                  {"sr_backend", config.sr_backend},
                                  {"working_resolution", config.denoiser.working_resolution},
                                  {"output_resolution", config.eval_resolution()},
                                  {"written", result.run.outputs.size()},
                                  {"failures", failures}};
  write_text_atomic(result.dir / "summary.json", summary.dump(2) + "\n");
  ctx.record({{"event", "inference"},
              {"dir", result.dir.string()},
              {"written", result.run.outputs.size()},
              {"failures", result.run.failures.size()}});
  spdlog::info("infer: wrote {} images to {} ({} failures)", result.run.outputs.size(), result.dir.string(),
               result.run.failures.size());
  return result;
}

}  // namespace frr::pipeline
