// SPDX-License-Identifier: Apache-2.0
#include "frr/sr/backend.hpp"

#include <map>
#include <mutex>

#include "frr/core/error.hpp"

namespace frr::sr {

namespace {

namespace F = torch::nn::functional;

class HatBackend final : public SRBackend {
 public:
  explicit HatBackend(SRCheckpoint ckpt) : ckpt_(std::move(ckpt)) { ckpt_.model()->eval(); }
  std::string name() const override { return "hat"; }
  std::int64_t upscale() const override { return ckpt_.config().upscale; }
  torch::Tensor upscale_image(const torch::Tensor& x_lr) const override {
    torch::NoGradGuard no_grad;
    auto net = ckpt_.model();
    return sr_forward(net, x_lr);
  }

 private:
  SRCheckpoint ckpt_;
};

class BicubicBackend final : public SRBackend {
 public:
  explicit BicubicBackend(std::int64_t factor) : factor_(factor) {}
  std::string name() const override { return "bicubic"; }
  std::int64_t upscale() const override { return factor_; }
  torch::Tensor upscale_image(const torch::Tensor& x_lr) const override {
    const bool unbatched = x_lr.dim() == 3;
    auto x = unbatched ? x_lr.unsqueeze(0) : x_lr;
    require<ShapeError>(x.dim() == 4, "bicubic backend: expected N x C x h x w");
    auto out = F::interpolate(x, F::InterpolateFuncOptions()
                                     .size(std::vector<std::int64_t>{x.size(2) * factor_, x.size(3) * factor_})
                                     .mode(torch::kBicubic)
                                     .align_corners(false))
                   .clamp(-1.0, 1.0);
    return unbatched ? out.squeeze(0) : out;
  }

 private:
  std::int64_t factor_;
};

struct Registry {
  std::mutex mutex;
  std::map<std::string, BackendFactory> factories;

  Registry() {
    factories["hat"] = [](const BackendArgs& args) -> std::unique_ptr<SRBackend> {
      if (args.checkpoint) return std::make_unique<HatBackend>(*args.checkpoint);
      return std::make_unique<HatBackend>(init_sr(args.config, args.seed));
    };
    factories["bicubic"] = [](const BackendArgs& args) -> std::unique_ptr<SRBackend> {
      return std::make_unique<BicubicBackend>(args.config.upscale);
    };
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

std::string joined_names() {
  std::string out;
  for (const auto& n : registered_sr_backends()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

void register_sr_backend(const std::string& name, BackendFactory factory) {
  require<InvalidArgument>(!name.empty() && factory != nullptr, "register_sr_backend: empty name or factory");
  std::lock_guard lock(registry().mutex);
  registry().factories[name] = std::move(factory);
}

std::vector<std::string> registered_sr_backends() {
  std::lock_guard lock(registry().mutex);
  std::vector<std::string> names;
  for (const auto& [name, factory] : registry().factories) names.push_back(name);
  return names;
}

bool has_sr_backend(const std::string& name) {
  std::lock_guard lock(registry().mutex);
  return registry().factories.count(name) != 0;
}

void require_sr_backend(const std::string& name) {
  if (!has_sr_backend(name)) {
    throw ConfigError("unknown sr backend '" + name + "'; registered: " + joined_names());
  }
}

std::unique_ptr<SRBackend> make_sr_backend(const std::string& name, const BackendArgs& args) {
  require_sr_backend(name);
  BackendFactory factory;
  {
    std::lock_guard lock(registry().mutex);
    factory = registry().factories.at(name);
  }
  return factory(args);
}

}  // namespace frr::sr
