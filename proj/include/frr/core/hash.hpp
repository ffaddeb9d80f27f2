// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frr {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws IoError on malformed input. Whitespace is ignored.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// 64-bit FNV-1a over `seed` (little endian) followed by `key`. Stable across
/// platforms and runs; used to derive per-image seeds.
std::uint64_t stable_hash(std::uint64_t seed, std::string_view key);

}  // namespace frr
