// SPDX-License-Identifier: Apache-2.0
//
// Procedural portrait renderer. Source faces for desk-scale datasets and
// test fixtures: a shaded head with hair, eyes, brows, nose and mouth, with
// colours, proportions and positions varied by the seed around the default
// FaceLayout.
#pragma once

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

#include "frr/data/face_layout.hpp"

namespace frr::data {

struct SyntheticFace {
  torch::Tensor image;  // 3 x size x size, file space
  FaceLayout layout;    // the layout actually drawn
};

SyntheticFace render_synthetic_face(std::uint64_t seed, std::int64_t size = 128);

/// Writes `count` faces as face_0000.png ... into `dir`, seeds seed, seed+1, ...
void write_synthetic_faces(const std::filesystem::path& dir, std::int64_t count, std::uint64_t seed,
                           std::int64_t size = 128);

}  // namespace frr::data
