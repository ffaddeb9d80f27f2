// SPDX-License-Identifier: Apache-2.0
//
// Embedding-space similarity. Face-recognition and image-text networks plug
// in through Embedder; the deterministic RandomProjectionEmbedder stands in
// for them in tests and desk-scale runs.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <torch/torch.h>

namespace frr::metrics {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  /// 3 x H x W file-space image -> unit-norm float64 vector. Throws
  /// NumericError when the raw embedding has zero norm.
  virtual torch::Tensor embed(const torch::Tensor& image) const = 0;
};

/// Scales `v` to unit L2 norm in float64; throws NumericError on a zero or
/// non-finite vector.
torch::Tensor unit_normalize(const torch::Tensor& v, const std::string& who);

/// Bicubic-downsamples to side x side, maps to [-1, 1] and multiplies by a
/// fixed Gaussian matrix drawn from `seed`, then normalizes.
class RandomProjectionEmbedder final : public Embedder {
 public:
  RandomProjectionEmbedder(std::string name = "randproj", std::int64_t dim = 128, std::int64_t side = 16,
                           std::uint64_t seed = 0);
  std::string name() const override { return name_; }
  torch::Tensor embed(const torch::Tensor& image) const override;
  const torch::Tensor& projection() const { return projection_; }
  std::int64_t side() const { return side_; }

 private:
  std::string name_;
  std::int64_t side_;
  torch::Tensor projection_;  // [3 side^2, dim], float64
};

/// Wraps an arbitrary feature extractor; its output is flattened and normalized.
class CallableEmbedder final : public Embedder {
 public:
  using Fn = std::function<torch::Tensor(const torch::Tensor&)>;
  CallableEmbedder(std::string name, Fn fn);
  std::string name() const override { return name_; }
  torch::Tensor embed(const torch::Tensor& image) const override;

 private:
  std::string name_;
  Fn fn_;
};

/// Adapter for networks exported with torch.jit (e.g. a VGGFace2 or CLIP
/// image tower). The image is resized to input_size, scaled to [0, 1],
/// normalized with the given per-channel mean/std and fed as 1 x 3 x S x S.
std::unique_ptr<Embedder> load_torchscript_embedder(const std::string& name, const std::filesystem::path& path,
                                                    std::int64_t input_size, std::array<double, 3> mean,
                                                    std::array<double, 3> std);

/// Cosine similarity of two images under `e`, clamped to [-1, 1].
double embedding_similarity(const Embedder& e, const torch::Tensor& a, const torch::Tensor& b);

}  // namespace frr::metrics
