// SPDX-License-Identifier: Apache-2.0
#include "frr/sr/hat.hpp"

#include <cmath>

#include "frr/core/archive.hpp"
#include "frr/core/error.hpp"
#include "frr/core/optim_state.hpp"
#include "frr/core/rng.hpp"

namespace frr::sr {

namespace F = torch::nn::functional;

namespace {

constexpr const char* kComponent = "sr";

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void expect_stage(const FeatureMap& f, std::initializer_list<FeatureStage> allowed, const char* op) {
  for (auto s : allowed) {
    if (f.stage == s) return;
  }
  throw ContractViolation(std::string(op) + ": unexpected feature stage '" + std::string(to_string(f.stage)) + "'");
}

}  // namespace

ResidualHybridGroupImpl::ResidualHybridGroupImpl(const SRConfig& c) {
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < c.num_hab_per_group; ++i) {
    const std::int64_t shift = (i % 2 == 0) ? 0 : c.window_size / 2;
    blocks->push_back(
        HybridAttentionBlock(c.embed_dim, c.num_heads, c.window_size, shift, c.mlp_ratio, c.ca_compress, c.ca_squeeze));
  }
  ocab = register_module("ocab",
                         OverlapCrossAttention(c.embed_dim, c.num_heads, c.window_size, c.overlap_window(), c.mlp_ratio));
  conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(c.embed_dim, c.embed_dim, 3).padding(1)));
}

HybridAttentionBlock ResidualHybridGroupImpl::block(std::size_t i) const {
  return HybridAttentionBlock(blocks->ptr<HybridAttentionBlockImpl>(i));
}

torch::Tensor ResidualHybridGroupImpl::forward(const torch::Tensor& x, double ca_weight) {
  auto y = x;
  for (std::size_t i = 0; i < blocks->size(); ++i) y = block(i)->forward(y, ca_weight);
  return conv(ocab(y)) + x;
}

HybridAttentionSRImpl::HybridAttentionSRImpl(const SRConfig& c) : config(c) {
  config.validate();
  const auto dim = c.embed_dim;
  conv_first = register_module("conv_first", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, dim, 3).padding(1)));
  groups = register_module("groups", torch::nn::ModuleList());
  for (std::int64_t i = 0; i < c.num_groups; ++i) groups->push_back(ResidualHybridGroup(c));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  conv_after_body =
      register_module("conv_after_body", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, dim, 3).padding(1)));
  conv_last = register_module(
      "conv_last", torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, 3 * c.upscale * c.upscale, 3).padding(1)));
  initialize(0);
}

ResidualHybridGroup HybridAttentionSRImpl::group(std::size_t i) const {
  return ResidualHybridGroup(groups->ptr<ResidualHybridGroupImpl>(i));
}

torch::Tensor HybridAttentionSRImpl::shallow(const torch::Tensor& x) {
  require<ShapeError>(x.dim() == 4 && x.size(1) == 3, "sr: expected N x 3 x h x w input");
  return conv_first(x);
}

torch::Tensor HybridAttentionSRImpl::body(const torch::Tensor& f0) {
  auto y = f0;
  for (std::size_t i = 0; i < groups->size(); ++i) y = group(i)->forward(y, config.ca_weight);
  y = norm(y.permute({0, 2, 3, 1})).permute({0, 3, 1, 2});
  return conv_after_body(y);
}

torch::Tensor HybridAttentionSRImpl::trunk(const torch::Tensor& f0) { return body(f0) + f0; }

torch::Tensor HybridAttentionSRImpl::reconstruct(const torch::Tensor& deep, const torch::Tensor& f0) {
  require<ShapeError>(deep.sizes() == f0.sizes(), "sr reconstruct: deep and shallow features differ in shape");
  auto projected = conv_last(deep + f0);
  const auto r2 = config.upscale * config.upscale;
  require<ShapeError>(projected.size(1) % r2 == 0, "sr reconstruct: channel count not divisible by upscale^2");
  return F::pixel_shuffle(projected, config.upscale);
}

torch::Tensor HybridAttentionSRImpl::forward(const torch::Tensor& x) {
  auto f0 = shallow(x);
  return reconstruct(body(f0), f0);
}

void HybridAttentionSRImpl::initialize(std::uint64_t seed) { initialize_sr_parameters(*this, seed); }

void initialize_sr_parameters(torch::nn::Module& module, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = make_generator(seed);
  for (auto& item : module.named_parameters()) {
    const auto& name = item.key();
    auto& p = item.value();
    if (ends_with(name, "bias_table") || p.dim() == 2) {
      p.normal_(0.0, 0.02, gen).clamp_(-0.04, 0.04);
    } else if (ends_with(name, "bias")) {
      p.zero_();
    } else if (p.dim() == 1) {
      p.fill_(1.0);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.numel() / p.size(0)));
      p.uniform_(-bound, bound, gen);
    }
  }
}

std::string_view to_string(FeatureStage stage) {
  switch (stage) {
    case FeatureStage::shallow: return "shallow";
    case FeatureStage::post_hab: return "post-HAB";
    case FeatureStage::post_ocab: return "post-OCAB";
    case FeatureStage::deep: return "deep";
    case FeatureStage::reconstructed: return "reconstructed";
  }
  return "unknown";
}

FeatureMap shallow_features(HybridAttentionSR& net, const torch::Tensor& x) {
  return {net->shallow(x), FeatureStage::shallow};
}

FeatureMap hab_forward(HybridAttentionBlock& block, const FeatureMap& f, double ca_weight) {
  expect_stage(f, {FeatureStage::shallow, FeatureStage::post_hab, FeatureStage::post_ocab}, "hab_forward");
  return {block->forward(f.tensor, ca_weight), FeatureStage::post_hab};
}

FeatureMap ocab_forward(OverlapCrossAttention& block, const FeatureMap& f) {
  expect_stage(f, {FeatureStage::post_hab}, "ocab_forward");
  return {block->forward(f.tensor), FeatureStage::post_ocab};
}

FeatureMap rha_group(ResidualHybridGroup& group, const FeatureMap& f, double ca_weight) {
  expect_stage(f, {FeatureStage::shallow, FeatureStage::post_ocab}, "rha_group");
  return {group->forward(f.tensor, ca_weight), FeatureStage::post_ocab};
}

FeatureMap deep_features(HybridAttentionSR& net, const FeatureMap& shallow) {
  expect_stage(shallow, {FeatureStage::shallow}, "deep_features");
  return {net->body(shallow.tensor), FeatureStage::deep};
}

torch::Tensor reconstruct(HybridAttentionSR& net, const FeatureMap& deep, const FeatureMap& shallow) {
  expect_stage(deep, {FeatureStage::deep}, "reconstruct");
  expect_stage(shallow, {FeatureStage::shallow}, "reconstruct");
  return net->reconstruct(deep.tensor, shallow.tensor);
}

torch::Tensor sr_forward(HybridAttentionSR& net, const torch::Tensor& x_lr) {
  const bool unbatched = x_lr.dim() == 3;
  auto x = unbatched ? x_lr.unsqueeze(0) : x_lr;
  auto out = net->forward(x).clamp(-1.0, 1.0);
  return unbatched ? out.squeeze(0) : out;
}

SRCheckpoint::SRCheckpoint(SRConfig config) : config_(std::move(config)), model_(config_) {}

SRCheckpoint::SRCheckpoint(const SRCheckpoint& other) : step(other.step), config_(other.config_), model_(config_) {
  torch::NoGradGuard no_grad;
  auto dst = model_->named_parameters();
  for (const auto& item : other.model_->named_parameters()) dst[item.key()].copy_(item.value());
  model_->train(other.model_->is_training());
}

SRCheckpoint& SRCheckpoint::operator=(const SRCheckpoint& other) {
  if (this != &other) {
    SRCheckpoint copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::int64_t SRCheckpoint::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : model_->parameters()) n += p.numel();
  return n;
}

SRCheckpoint init_sr(const SRConfig& config, std::uint64_t seed) {
  SRCheckpoint ckpt(config);
  ckpt.model()->initialize(seed);
  return ckpt;
}

void save_sr_checkpoint(const std::filesystem::path& path, const SRCheckpoint& ckpt,
                        const TrainingSnapshot& state) {
  TensorArchive archive;
  archive.meta = {{"format_version", kSRCheckpointFormatVersion},
                  {"component", kComponent},
                  {"config", ckpt.config()},
                  {"step", ckpt.step}};
  const auto params = ckpt.model()->named_parameters();
  for (const auto& item : params) archive.tensors.emplace_back(kParamPrefix + item.key(), item.value());
  append_training_state(archive, state, params);
  save_archive(path, archive);
}

SRCheckpoint load_sr_checkpoint(const std::filesystem::path& path, WeightSelection weights) {
  const auto archive = load_archive(path);
  const auto& meta = archive.meta;
  if (meta.value("format_version", -1) != kSRCheckpointFormatVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint format version");
  }
  if (meta.value("component", std::string{}) != kComponent) {
    throw CheckpointError(path.string() + ": not an sr checkpoint (component '" +
                          meta.value("component", std::string{}) + "')");
  }
  SRCheckpoint ckpt(meta.at("config").get<SRConfig>());
  ckpt.step = meta.at("step").get<std::int64_t>();
  load_selected_weights(archive, weights, ckpt.model()->named_parameters());
  return ckpt;
}

void load_sr_training_state(const std::filesystem::path& path, const SRCheckpoint& ckpt,
                            const TrainingRestore& state) {
  restore_training_state(load_archive(path), state, ckpt.model()->named_parameters());
}

}  // namespace frr::sr
