// SPDX-License-Identifier: Apache-2.0
#include "frr/core/rng.hpp"

#include <numeric>
#include <random>

#include <ATen/CPUGeneratorImpl.h>

namespace frr {

torch::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 eng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // Modulo bias is below 2^-40 for any realistic dataset size.
    const auto j = static_cast<std::size_t>(eng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace frr
