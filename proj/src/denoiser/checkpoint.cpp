// SPDX-License-Identifier: Apache-2.0
#include "frr/denoiser/checkpoint.hpp"

#include "frr/core/archive.hpp"
#include "frr/core/error.hpp"
#include "frr/core/optim_state.hpp"

namespace frr::denoiser {

namespace {

constexpr const char* kComponent = "denoiser";

void copy_parameters(const ConditionalUNet& from, ConditionalUNet& to) {
  torch::NoGradGuard no_grad;
  auto src = from->named_parameters();
  auto dst = to->named_parameters();
  for (const auto& item : src) dst[item.key()].copy_(item.value());
}

}  // namespace

DenoiserCheckpoint::DenoiserCheckpoint(DenoiserConfig config, diffusion::ScheduleSpec schedule)
    : config_(std::move(config)), schedule_(std::move(schedule)), model_(config_) {
  diffusion::NoiseSchedule validate(schedule_);
  (void)validate;
}

DenoiserCheckpoint::DenoiserCheckpoint(const DenoiserCheckpoint& other)
    : step(other.step), config_(other.config_), schedule_(other.schedule_), model_(config_) {
  copy_parameters(other.model_, model_);
  model_->train(other.model_->is_training());
}

DenoiserCheckpoint& DenoiserCheckpoint::operator=(const DenoiserCheckpoint& other) {
  if (this != &other) {
    DenoiserCheckpoint copy(other);
    *this = std::move(copy);
  }
  return *this;
}

diffusion::EpsPredictor DenoiserCheckpoint::predictor() const {
  auto model = model_;
  return [model](const torch::Tensor& x_t, const torch::Tensor& t, const torch::Tensor& y0) mutable {
    return model->forward(x_t, t, y0);
  };
}

std::int64_t DenoiserCheckpoint::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : model_->parameters()) n += p.numel();
  return n;
}

DenoiserCheckpoint init_denoiser(const DenoiserConfig& config, std::uint64_t seed,
                                 const diffusion::ScheduleSpec& schedule) {
  DenoiserCheckpoint ckpt(config, schedule);
  ckpt.model()->initialize(seed);
  return ckpt;
}

torch::Tensor predict_eps(const DenoiserCheckpoint& ckpt, const torch::Tensor& x_t, const torch::Tensor& t,
                          const torch::Tensor& y0) {
  const bool unbatched = x_t.dim() == 3;
  auto x = unbatched ? x_t.unsqueeze(0) : x_t;
  auto y = y0.dim() == 3 ? y0.unsqueeze(0) : y0;
  diffusion::NoiseSchedule(ckpt.schedule()).check_step(t.min().item<std::int64_t>());
  diffusion::NoiseSchedule(ckpt.schedule()).check_step(t.max().item<std::int64_t>());
  auto out = const_cast<ConditionalUNet&>(ckpt.model())->forward(x, t, y);
  return unbatched ? out.squeeze(0) : out;
}

torch::Tensor predict_eps(const DenoiserCheckpoint& ckpt, const torch::Tensor& x_t, std::int64_t t,
                          const torch::Tensor& y0) {
  const auto n = x_t.dim() == 3 ? 1 : x_t.size(0);
  return predict_eps(ckpt, x_t, torch::full({n}, t, torch::kLong), y0);
}

void save_checkpoint(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt,
                     const TrainingSnapshot& state) {
  TensorArchive archive;
  archive.meta = {{"format_version", kCheckpointFormatVersion},
                  {"component", kComponent},
                  {"config", ckpt.config()},
                  {"schedule", ckpt.schedule()},
                  {"step", ckpt.step}};
  const auto params = ckpt.model()->named_parameters();
  for (const auto& item : params) archive.tensors.emplace_back(kParamPrefix + item.key(), item.value());
  append_training_state(archive, state, params);
  save_archive(path, archive);
}

DenoiserCheckpoint load_checkpoint(const std::filesystem::path& path, WeightSelection weights) {
  const auto archive = load_archive(path);
  const auto& meta = archive.meta;
  if (meta.value("format_version", -1) != kCheckpointFormatVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint format version");
  }
  if (meta.value("component", std::string{}) != kComponent) {
    throw CheckpointError(path.string() + ": not a denoiser checkpoint (component '" +
                          meta.value("component", std::string{}) + "')");
  }
  DenoiserCheckpoint ckpt(meta.at("config").get<DenoiserConfig>(), meta.at("schedule").get<diffusion::ScheduleSpec>());
  ckpt.step = meta.at("step").get<std::int64_t>();
  load_selected_weights(archive, weights, ckpt.model()->named_parameters());
  return ckpt;
}

void load_training_state(const std::filesystem::path& path, const DenoiserCheckpoint& ckpt,
                         const TrainingRestore& state) {
  restore_training_state(load_archive(path), state, ckpt.model()->named_parameters());
}

}  // namespace frr::denoiser
