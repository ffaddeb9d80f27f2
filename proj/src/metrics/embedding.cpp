// SPDX-License-Identifier: Apache-2.0
#include "frr/metrics/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <torch/script.h>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"

namespace frr::metrics {

namespace {

namespace F = torch::nn::functional;

torch::Tensor resize_square(const torch::Tensor& image, std::int64_t side) {
  auto x = image.to(torch::kFloat32).unsqueeze(0);
  const bool shrinking = x.size(2) > side || x.size(3) > side;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<std::int64_t>{side, side})
                               .mode(torch::kBicubic)
                               .align_corners(false)
                               .antialias(shrinking))
      .squeeze(0);
}

class TorchScriptEmbedder final : public Embedder {
 public:
  TorchScriptEmbedder(std::string name, torch::jit::Module module, std::int64_t size, std::array<double, 3> mean,
                      std::array<double, 3> std)
      : name_(std::move(name)), module_(std::move(module)), size_(size) {
    module_.eval();
    mean_ = torch::tensor({mean[0], mean[1], mean[2]}, torch::kFloat32).view({3, 1, 1});
    std_ = torch::tensor({std[0], std[1], std[2]}, torch::kFloat32).view({3, 1, 1});
  }
  std::string name() const override { return name_; }
  torch::Tensor embed(const torch::Tensor& image) const override {
    check_rgb(image, name_);
    torch::NoGradGuard no_grad;
    auto x = ((resize_square(image, size_) / 255.0 - mean_) / std_).unsqueeze(0);
    auto out = const_cast<torch::jit::Module&>(module_).forward({x});
    return unit_normalize(out.toTensor().flatten(), name_);
  }

 private:
  std::string name_;
  torch::jit::Module module_;
  std::int64_t size_;
  torch::Tensor mean_, std_;
};

}  // namespace

torch::Tensor unit_normalize(const torch::Tensor& v, const std::string& who) {
  auto d = v.to(torch::kFloat64).flatten();
  const double norm = d.norm().item<double>();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError(who + ": embedding has zero or non-finite norm");
  return d / norm;
}

RandomProjectionEmbedder::RandomProjectionEmbedder(std::string name, std::int64_t dim, std::int64_t side,
                                                   std::uint64_t seed)
    : name_(std::move(name)), side_(side) {
  require(dim > 0 && side > 0, "RandomProjectionEmbedder: dim and side must be positive");
  projection_ = torch::randn({3 * side * side, dim}, make_generator(seed), torch::kFloat64);
}

torch::Tensor RandomProjectionEmbedder::embed(const torch::Tensor& image) const {
  check_rgb(image, name_);
  require<ShapeError>(image.dim() == 3, name_ + ": expected a single 3 x H x W image");
  auto pixels = (resize_square(image, side_).to(torch::kFloat64) / 127.5 - 1.0).flatten();
  return unit_normalize(pixels.matmul(projection_), name_);
}

CallableEmbedder::CallableEmbedder(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {
  require(static_cast<bool>(fn_), "CallableEmbedder: empty function");
}

torch::Tensor CallableEmbedder::embed(const torch::Tensor& image) const { return unit_normalize(fn_(image), name_); }

std::unique_ptr<Embedder> load_torchscript_embedder(const std::string& name, const std::filesystem::path& path,
                                                    std::int64_t input_size, std::array<double, 3> mean,
                                                    std::array<double, 3> std) {
  try {
    return std::make_unique<TorchScriptEmbedder>(name, torch::jit::load(path.string()), input_size, mean, std);
  } catch (const c10::Error& e) {
    throw IoError("cannot load TorchScript embedder '" + name + "' from " + path.string() + ": " + e.what_without_backtrace());
  }
}

double embedding_similarity(const Embedder& e, const torch::Tensor& a, const torch::Tensor& b) {
  check_same_shape(a, b, "embedding_similarity");
  auto ea = e.embed(a), eb = e.embed(b);
  require<ShapeError>(ea.sizes() == eb.sizes(), e.name() + ": embeddings differ in length");
  return std::clamp(ea.dot(eb).item<double>(), -1.0, 1.0);
}

}  // namespace frr::metrics
