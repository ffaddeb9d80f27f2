// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace frr {

/// A CPU generator seeded with `seed`. Every stochastic operation in the
/// library takes one of these (or a seed) explicitly; the global torch RNG is
/// never consulted.
torch::Generator make_generator(std::uint64_t seed);

/// splitmix64 finalizer over (seed, stream): cheap independent sub-seeds,
/// e.g. one per training step.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Fisher-Yates permutation of [0, n) driven by mt19937_64. Fully specified,
/// so the same seed gives the same order on every standard library.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace frr
