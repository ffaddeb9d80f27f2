// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <functional>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "frr/core/ema.hpp"
#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/data/loader.hpp"
#include "frr/denoiser/checkpoint.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/run.hpp"
#include "frr/sr/finetune.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<std::pair<std::int64_t, fs::path>> list_checkpoints(const fs::path& dir) {
  static const std::regex pattern(R"(ckpt_(\d+)\.frr)");
  std::vector<std::pair<std::int64_t, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& de : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = de.path().filename().string();
    if (de.is_regular_file() && std::regex_match(name, m, pattern)) out.emplace_back(std::stoll(m[1].str()), de.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path checkpoint_path(const fs::path& dir, std::int64_t step) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_%08lld.frr", static_cast<long long>(step));
  return dir / name;
}

void write_loss_table(const fs::path& path, const std::vector<double>& history) {
  std::ostringstream os;
  os << "step\tloss\tsmoothed\n";
  double smoothed = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    smoothed = i == 0 ? history[i] : 0.98 * smoothed + 0.02 * history[i];
    os << (i + 1) << '\t' << history[i] << '\t' << smoothed << '\n';
  }
  write_text_atomic(path, os.str());
}

struct StageLoop {
  std::string stage;
  fs::path dir;
  const StageTraining* settings;
  std::function<double(std::int64_t step)> step;
  std::function<void(const fs::path&, std::int64_t step)> save;
};

// Runs steps [start, iterations) with periodic checkpoints, loss history and
// metric records. Returns the newest checkpoint.
fs::path run_loop(const RunContext& ctx, const StageLoop& loop, std::int64_t start, std::vector<double>& history,
                  const TrainOptions& options) {
  const auto& s = *loop.settings;
  const auto end = options.max_steps >= 0 ? std::min(s.iterations, start + options.max_steps) : s.iterations;
  std::optional<fs::path> newest;
  if (auto latest = latest_checkpoint(loop.dir)) newest = *latest;
  double smoothed = history.empty() ? 0.0 : history.front();
  for (std::size_t i = 1; i < history.size(); ++i) smoothed = 0.98 * smoothed + 0.02 * history[i];
  for (std::int64_t k = start; k < end; ++k) {
    const double loss = loop.step(k);
    history.push_back(loss);
    smoothed = history.size() == 1 ? loss : 0.98 * smoothed + 0.02 * loss;
    ctx.record({{"event", "train_step"}, {"stage", loop.stage}, {"step", k + 1}, {"loss", loss}, {"smoothed", smoothed}});
    const auto done = k + 1;
    if (done % s.checkpoint_interval == 0 || done == s.iterations || done == end) {
      const auto path = checkpoint_path(loop.dir, done);
      loop.save(path, done);
      write_loss_table(loop.dir / "loss.tsv", history);
      auto all = list_checkpoints(loop.dir);
      for (std::size_t i = 0; i + static_cast<std::size_t>(s.keep_checkpoints) < all.size(); ++i) {
        fs::remove(all[i].second);
      }
      ctx.record({{"event", "checkpoint"}, {"stage", loop.stage}, {"step", done}, {"path", path.string()}});
      spdlog::info("{}: step {}/{} loss {:.5f} smoothed {:.5f} -> {}", loop.stage, done, s.iterations, loss, smoothed,
                   path.filename().string());
      newest = path;
    } else if (done % 50 == 0) {
      spdlog::info("{}: step {}/{} loss {:.5f} smoothed {:.5f}", loop.stage, done, s.iterations, loss, smoothed);
    }
  }
  if (!newest) {
    const auto path = checkpoint_path(loop.dir, start);
    loop.save(path, start);
    write_loss_table(loop.dir / "loss.tsv", history);
    newest = path;
  }
  return *newest;
}

std::optional<fs::path> resumable(const RunContext& ctx, const std::string& stage, const TrainOptions& options) {
  auto existing = latest_checkpoint(ctx.root() / stage);
  if (existing && !options.resume) {
    throw ConfigError(stage + " of run '" + ctx.config().run_id + "' already has checkpoints (" +
                      existing->filename().string() + "); pass --resume to continue it");
  }
  return existing;
}

torch::Tensor gather(const std::vector<data::LoadedSample>& samples, torch::Tensor data::LoadedSample::*field) {
  std::vector<torch::Tensor> parts;
  parts.reserve(samples.size());
  for (const auto& s : samples) parts.push_back(s.*field);
  return torch::stack(parts);
}

torch::Tensor batch_indices(std::uint64_t stage_seed, std::int64_t step, std::int64_t n, std::int64_t batch) {
  auto gen = make_generator(derive_seed(stage_seed, 2 * static_cast<std::uint64_t>(step)));
  return torch::randint(0, n, {batch}, gen, torch::kLong);
}

}  // namespace

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  auto all = list_checkpoints(dir);
  if (all.empty()) return std::nullopt;
  return all.back().second;
}

fs::path cmd_train_stage1(const RunConfig& config, const TrainOptions& options) {
  validate_config(config, true);
  RunContext ctx(config, "train-stage1");
  const auto existing = resumable(ctx, "stage1", options);
  const auto manifest = data::load_manifest(ctx.manifest_path());
  const auto r = config.denoiser.working_resolution;
  const auto samples = data::load_split(manifest, data::Split::train, r, r);
  if (samples.empty()) throw InvalidArgument("the train split of " + ctx.manifest_path().string() + " is empty");
  const auto x0 = gather(samples, &data::LoadedSample::x0_lr);
  const auto y0 = gather(samples, &data::LoadedSample::y0_lr);
  const auto n = x0.size(0);
  const auto stage_seed = derive_seed(config.seed, kStage1SeedStream);

  auto ckpt = [&] {
    if (!existing) return denoiser::init_denoiser(config.denoiser, stage_seed, config.schedule);
    auto loaded = denoiser::load_checkpoint(*existing);
    if (!(loaded.schedule() == config.schedule)) {
      throw CheckpointError("schedule fingerprint mismatch: " + existing->string() + " was trained with " +
                            loaded.schedule().fingerprint() + " but the config has " + config.schedule.fingerprint());
    }
    if (!(loaded.config() == config.denoiser)) {
      throw CheckpointError(existing->string() + " was trained with a different denoiser config");
    }
    return loaded;
  }();
  const auto params = ckpt.model()->named_parameters();
  torch::optim::Adam optimizer(ckpt.model()->parameters(), torch::optim::AdamOptions(config.stage1.learning_rate));
  std::optional<ParameterEma> ema;
  if (config.stage1.ema_decay > 0.0) ema.emplace(params, config.stage1.ema_decay);
  std::vector<double> history;
  if (existing) {
    denoiser::load_training_state(*existing, ckpt, {&optimizer, ema ? &*ema : nullptr, &history});
    if (static_cast<std::int64_t>(history.size()) != ckpt.step) {
      throw CheckpointError(existing->string() + ": loss history does not match the step counter");
    }
    spdlog::info("stage1: resuming from step {}", ckpt.step);
  }
  ckpt.model()->train();

  const diffusion::NoiseSchedule schedule(config.schedule);
  const auto predictor = ckpt.predictor();
  StageLoop loop;
  loop.stage = "stage1";
  loop.dir = ctx.dir("stage1");
  loop.settings = &config.stage1;
  loop.step = [&](std::int64_t k) {
    const auto idx = batch_indices(stage_seed, k, n, config.stage1.batch_size);
    const diffusion::TrainBatch batch{x0.index_select(0, idx), y0.index_select(0, idx), "stage1 step " + std::to_string(k + 1)};
    const double loss =
        diffusion::train_step(batch, schedule, predictor, optimizer, derive_seed(stage_seed, 2 * static_cast<std::uint64_t>(k) + 1));
    if (ema) ema->update(params);
    ckpt.step = k + 1;
    return loss;
  };
  loop.save = [&](const fs::path& path, std::int64_t) {
    denoiser::save_checkpoint(path, ckpt, {&optimizer, ema ? &*ema : nullptr, &history});
  };
  return run_loop(ctx, loop, ckpt.step, history, options);
}

std::optional<fs::path> cmd_train_stage2(const RunConfig& config, const TrainOptions& options) {
  validate_config(config, true);
  if (config.sr_backend != "hat") {
    spdlog::info("stage2: back-end '{}' has no trainable parameters", config.sr_backend);
    return std::nullopt;
  }
  RunContext ctx(config, "train-stage2");
  const auto existing = resumable(ctx, "stage2", options);
  const auto manifest = data::load_manifest(ctx.manifest_path());
  const auto samples =
      data::load_split(manifest, data::Split::train, config.denoiser.working_resolution, config.eval_resolution());
  if (samples.empty()) throw InvalidArgument("the train split of " + ctx.manifest_path().string() + " is empty");
  const auto x_lr = gather(samples, &data::LoadedSample::x0_lr);
  const auto x_hr = gather(samples, &data::LoadedSample::x0_hr);
  const auto n = x_lr.size(0);
  const auto stage_seed = derive_seed(config.seed, kStage2SeedStream);

  auto ckpt = [&] {
    if (!existing) return sr::init_sr(config.sr, stage_seed);
    auto loaded = sr::load_sr_checkpoint(*existing);
    if (!(loaded.config() == config.sr)) {
      throw CheckpointError(existing->string() + " was trained with a different SR config");
    }
    return loaded;
  }();
  const auto params = ckpt.model()->named_parameters();
  torch::optim::Adam optimizer(ckpt.model()->parameters(), torch::optim::AdamOptions(config.stage2.learning_rate));
  std::optional<ParameterEma> ema;
  if (config.stage2.ema_decay > 0.0) ema.emplace(params, config.stage2.ema_decay);
  std::vector<double> history;
  if (existing) {
    sr::load_sr_training_state(*existing, ckpt, {&optimizer, ema ? &*ema : nullptr, &history});
    if (static_cast<std::int64_t>(history.size()) != ckpt.step) {
      throw CheckpointError(existing->string() + ": loss history does not match the step counter");
    }
    spdlog::info("stage2: resuming from step {}", ckpt.step);
  }
  ckpt.model()->train();

  StageLoop loop;
  loop.stage = "stage2";
  loop.dir = ctx.dir("stage2");
  loop.settings = &config.stage2;
  loop.step = [&](std::int64_t k) {
    const auto idx = batch_indices(stage_seed, k, n, config.stage2.batch_size);
    const sr::SRBatch batch{x_lr.index_select(0, idx), x_hr.index_select(0, idx), "stage2 step " + std::to_string(k + 1)};
    const double loss = sr::finetune_step(batch, ckpt, optimizer);
    if (ema) ema->update(params);
    ckpt.step = k + 1;
    return loss;
  };
  loop.save = [&](const fs::path& path, std::int64_t) {
    sr::save_sr_checkpoint(path, ckpt, {&optimizer, ema ? &*ema : nullptr, &history});
  };
  return run_loop(ctx, loop, ckpt.step, history, options);
}

}  // namespace frr::pipeline
