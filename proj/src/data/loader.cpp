// SPDX-License-Identifier: Apache-2.0
#include "frr/data/loader.hpp"

#include <numeric>

#include "frr/core/error.hpp"
#include "frr/core/hash.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"
#include "frr/data/resample.hpp"

namespace frr::data {

torch::Tensor read_verified(const DatasetManifest& manifest, const std::string& relative_path,
                            const std::string& expected_sha256) {
  const auto path = manifest.resolve(relative_path);
  const auto bytes = read_bytes(path);
  const auto actual = sha256_hex(bytes);
  if (actual != expected_sha256) {
    throw ChecksumError("checksum mismatch for " + path.string() + ": expected " + expected_sha256 + ", got " + actual);
  }
  return decode_image(bytes);
}

torch::Tensor prepare_image(const torch::Tensor& file_space, std::int64_t side) {
  require(side > 0, "prepare_image: side must be positive");
  auto img = file_space;
  if (img.size(1) != side || img.size(2) != side) img = quantize_8bit(resize_bicubic(img, side, side));
  return to_model_space(img).clamp(-1.0, 1.0);
}

SplitStream::SplitStream(const DatasetManifest& manifest, Split split, std::int64_t working_resolution,
                         std::int64_t hr_resolution, std::uint64_t seed, bool shuffle)
    : manifest_(&manifest),
      entries_(manifest.split(split)),
      working_(working_resolution),
      hr_(hr_resolution),
      shuffle_(shuffle) {
  require(working_ > 0 && hr_ > 0, "SplitStream: resolutions must be positive");
  require(working_ <= hr_, "SplitStream: working resolution exceeds the high resolution");
  reset(seed);
}

void SplitStream::reset(std::uint64_t seed) {
  if (shuffle_) {
    order_ = shuffled_indices(entries_.size(), seed);
  } else {
    order_.resize(entries_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
  order_ids_.clear();
  for (auto i : order_) order_ids_.push_back(entries_[i]->id);
  pos_ = 0;
}

std::optional<LoadedSample> SplitStream::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  const auto& e = *entries_[order_[pos_++]];
  const auto raw = read_verified(*manifest_, e.raw_path, e.raw_sha256);
  const auto ret = read_verified(*manifest_, e.retouched_path, e.retouched_sha256);
  if (raw.sizes() != ret.sizes()) throw ShapeError("entry '" + e.id + "': raw and retouched sizes differ");
  return LoadedSample{e.id, prepare_image(raw, working_), prepare_image(ret, working_), prepare_image(raw, hr_)};
}

std::vector<LoadedSample> load_split(const DatasetManifest& manifest, Split split, std::int64_t working_resolution,
                                     std::int64_t hr_resolution, std::uint64_t seed, bool shuffle) {
  SplitStream stream(manifest, split, working_resolution, hr_resolution, seed, shuffle);
  std::vector<LoadedSample> out;
  while (auto s = stream.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace frr::data
