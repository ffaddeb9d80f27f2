// SPDX-License-Identifier: Apache-2.0
#include "frr/core/archive.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"

namespace frr {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'R', 'R', 'A', 'R', 'C', 'H', '\0'};

std::string dtype_tag(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: throw InvalidArgument(std::string("archive: unsupported dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_tag(const std::string& tag) {
  if (tag == "f32") return torch::kFloat32;
  if (tag == "f64") return torch::kFloat64;
  if (tag == "i64") return torch::kInt64;
  throw CheckpointError("archive: unknown dtype tag '" + tag + "'");
}

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("archive: truncated header");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

const torch::Tensor& TensorArchive::at(const std::string& name) const {
  auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& kv) { return kv.first == name; });
  if (it == tensors.end()) throw CheckpointError("archive: missing tensor '" + name + "'");
  return it->second;
}

bool TensorArchive::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const auto& kv) { return kv.first == name; });
}

void save_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  nlohmann::json table = nlohmann::json::array();
  std::vector<torch::Tensor> payloads;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : archive.tensors) {
    auto t = tensor.detach().cpu().contiguous();
    const auto nbytes = static_cast<std::uint64_t>(t.numel() * t.element_size());
    table.push_back({{"name", name},
                     {"dtype", dtype_tag(t.scalar_type())},
                     {"shape", t.sizes().vec()},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
    payloads.push_back(std::move(t));
  }
  const nlohmann::json manifest{{"meta", archive.meta}, {"tensors", table}};
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kMagic.size() + 12 + text.size() + offset);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : payloads) {
    const auto* p = static_cast<const std::uint8_t*>(t.data_ptr());
    out.insert(out.end(), p, p + t.numel() * t.element_size());
  }
  write_bytes_atomic(path, out);
}

TensorArchive load_archive(const std::filesystem::path& path) {
  const auto in = read_bytes(path);
  std::size_t pos = 0;
  if (in.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
    throw CheckpointError(path.string() + ": not a tensor archive");
  }
  pos = kMagic.size();
  const auto version = get<std::uint32_t>(in, pos);
  if (version != kArchiveVersion) {
    throw CheckpointError(path.string() + ": unsupported archive version " + std::to_string(version));
  }
  const auto manifest_len = get<std::uint64_t>(in, pos);
  if (pos + manifest_len > in.size()) throw CheckpointError(path.string() + ": truncated manifest");
  const auto manifest = nlohmann::json::parse(in.begin() + static_cast<std::ptrdiff_t>(pos),
                                              in.begin() + static_cast<std::ptrdiff_t>(pos + manifest_len));
  pos += manifest_len;
  const std::size_t payload_start = pos;

  TensorArchive archive;
  archive.meta = manifest.at("meta");
  for (const auto& entry : manifest.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto dtype = dtype_from_tag(entry.at("dtype").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto off = entry.at("offset").get<std::uint64_t>();
    const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (static_cast<std::uint64_t>(t.numel() * t.element_size()) != nbytes) {
      throw CheckpointError(path.string() + ": tensor '" + name + "' size does not match its shape");
    }
    if (payload_start + off + nbytes > in.size()) {
      throw CheckpointError(path.string() + ": tensor '" + name + "' extends past end of file");
    }
    std::memcpy(t.data_ptr(), in.data() + payload_start + off, nbytes);
    archive.tensors.emplace_back(name, std::move(t));
  }
  return archive;
}

}  // namespace frr
