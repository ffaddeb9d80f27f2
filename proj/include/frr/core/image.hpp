// SPDX-License-Identifier: Apache-2.0
//
// Image tensors and their conversions.
//
// An ImageTensor is a float tensor laid out channels x height x width, or
// batch x channels x height x width. Two value ranges are in use:
//   file space   [0, 255], what PNG files hold;
//   model space  [-1, 1], what the networks consume (pixel / 127.5 - 1).
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace frr {

using ImageTensor = torch::Tensor;

/// Throws ShapeError naming `what` unless `a` and `b` have identical sizes.
void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const std::string& what);

/// Throws ShapeError unless `img` is 3 x H x W or N x 3 x H x W.
void check_rgb(const torch::Tensor& img, const std::string& what);

torch::Tensor to_model_space(const torch::Tensor& file_space);
torch::Tensor to_file_space(const torch::Tensor& model_space);

/// Decodes PNG/JPEG/BMP bytes into a float32 3 x H x W file-space tensor (RGB).
torch::Tensor decode_image(std::span<const std::uint8_t> bytes);
torch::Tensor read_image(const std::filesystem::path& path);

/// Rounds and clamps a file-space tensor to 8 bits and encodes it as PNG.
/// The encoding is deterministic: identical tensors give identical bytes.
std::vector<std::uint8_t> encode_png(const torch::Tensor& file_space);
void write_png(const std::filesystem::path& path, const torch::Tensor& file_space);

/// Round-trips through 8-bit quantization without touching the disk.
torch::Tensor quantize_8bit(const torch::Tensor& file_space);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
/// Writes to `path.tmp` and renames over `path`.
void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace frr
