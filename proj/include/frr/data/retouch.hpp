// SPDX-License-Identifier: Apache-2.0
//
// Deterministic retouching simulator: parametric stand-ins for the six
// beautification operations of a commercial face-beautify service.
//
//   skin_smoothing   edge-preserving blur inside the face, radius and blend ~ level
//   skin_whitening   luminance lift inside the face with highlight roll-off ~ level
//   eye_enlarging    radial magnification around each eye ~ level
//   eyebrow_shaping  brow lift plus local contrast in the brow band ~ level
//   face_slimming    inward translation warps at both cheeks ~ level
//   face_shrinking   radial contraction of the whole face ~ level
//
// Level 0 leaves the image untouched, bit for bit.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "frr/data/face_layout.hpp"

namespace frr::data {

enum class RetouchOp { eye_enlarging, face_slimming, skin_whitening, skin_smoothing, eyebrow_shaping, face_shrinking };

inline constexpr std::array<RetouchOp, 6> kAllRetouchOps{
    RetouchOp::eye_enlarging,   RetouchOp::face_slimming,   RetouchOp::skin_whitening,
    RetouchOp::skin_smoothing,  RetouchOp::eyebrow_shaping, RetouchOp::face_shrinking};

std::string_view to_string(RetouchOp op);
/// Throws InvalidArgument listing the valid names.
RetouchOp parse_retouch_op(std::string_view name);

struct RetouchStep {
  RetouchOp op;
  int level = 100;  // [0, 100]
  bool operator==(const RetouchStep&) const = default;
};
using RetouchSpec = std::vector<RetouchStep>;

/// All six operations at level 100, the recipe of the paired dataset.
RetouchSpec default_retouch_spec();

void to_json(nlohmann::json& j, const RetouchStep& s);
void from_json(const nlohmann::json& j, RetouchStep& s);

/// Applies `ops` in order to a 3 x H x W file-space image. A pure function of
/// (raw, ops, seed, landmarks); the seed perturbs region centres slightly.
/// Throws InvalidArgument on levels outside [0, 100].
torch::Tensor synthetic_retouch(const torch::Tensor& raw, const RetouchSpec& ops, std::uint64_t seed,
                                const LandmarkProvider& landmarks = FixedLandmarks{});

}  // namespace frr::data
