// SPDX-License-Identifier: Apache-2.0
#include "frr/data/manifest.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/core/rng.hpp"

namespace frr::data {

namespace {
constexpr const char* kFormatName = "frr-dataset-manifest";
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(name) + "' (expected train or test)");
}

std::vector<const ManifestEntry*> DatasetManifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

std::size_t DatasetManifest::count(Split s) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.split == s ? 1 : 0;
  return n;
}

std::vector<Split> assign_split(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie strictly between 0 and 1");
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  const auto order = shuffled_indices(n, seed);
  std::vector<Split> labels(n, Split::test);
  for (std::size_t k = 0; k < n_train; ++k) labels[order[k]] = Split::train;
  return labels;
}

void to_json(nlohmann::json& j, const Provenance& p) {
  j = {{"kind", p.kind}, {"source", p.source}, {"seed", p.seed}, {"attempts", p.attempts}, {"statuses", p.statuses}};
}

void from_json(const nlohmann::json& j, Provenance& p) {
  p.kind = j.at("kind").get<std::string>();
  p.source = j.value("source", std::string{});
  p.seed = j.value("seed", std::uint64_t{0});
  p.attempts = j.value("attempts", 0);
  p.statuses = j.value("statuses", std::vector<int>{});
  if (p.kind != "simulator" && p.kind != "api" && p.kind != "preexisting") {
    throw InvalidArgument("unknown provenance kind '" + p.kind + "'");
  }
}

void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = {{"id", e.id},
       {"raw", e.raw_path},
       {"retouched", e.retouched_path},
       {"raw_sha256", e.raw_sha256},
       {"retouched_sha256", e.retouched_sha256},
       {"ops", e.ops},
       {"provenance", e.provenance},
       {"split", to_string(e.split)}};
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.raw_path = j.at("raw").get<std::string>();
  e.retouched_path = j.at("retouched").get<std::string>();
  e.raw_sha256 = j.at("raw_sha256").get<std::string>();
  e.retouched_sha256 = j.at("retouched_sha256").get<std::string>();
  e.ops = j.at("ops").get<RetouchSpec>();
  e.provenance = j.at("provenance").get<Provenance>();
  e.split = parse_split(j.at("split").get<std::string>());
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  nlohmann::json header = {{"format", kFormatName},
                           {"format_version", kManifestFormatVersion},
                           {"source_resolution", m.source_resolution},
                           {"split_ratio", m.split_ratio},
                           {"split_seed", m.split_seed},
                           {"entries", m.entries.size()}};
  os << header.dump() << '\n';
  for (const auto& e : m.entries) os << nlohmann::json(e).dump() << '\n';
  return os.str();
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DatasetManifest m;
  m.root = root;
  std::size_t declared = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (line_no == 1) {
      if (j.value("format", std::string{}) != kFormatName) throw InvalidArgument("not a dataset manifest");
      if (j.value("format_version", -1) != kManifestFormatVersion) {
        throw InvalidArgument("unsupported manifest format_version " + j.value("format_version", nlohmann::json()).dump());
      }
      m.source_resolution = j.at("source_resolution").get<std::int64_t>();
      m.split_ratio = j.at("split_ratio").get<double>();
      m.split_seed = j.at("split_seed").get<std::uint64_t>();
      declared = j.at("entries").get<std::size_t>();
      continue;
    }
    ManifestEntry e;
    try {
      e = j.get<ManifestEntry>();
    } catch (const nlohmann::json::exception& ex) {
      throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (!ids.insert(e.id).second) throw InvalidArgument("manifest: duplicate id '" + e.id + "'");
    m.entries.push_back(std::move(e));
  }
  if (line_no == 0) throw InvalidArgument("manifest is empty");
  if (declared != m.entries.size()) {
    throw InvalidArgument("manifest header declares " + std::to_string(declared) + " entries, found " +
                          std::to_string(m.entries.size()));
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_text_atomic(path, serialize_manifest(manifest));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  auto m = parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
  for (const auto& e : m.entries) {
    for (const auto* rel : {&e.raw_path, &e.retouched_path}) {
      if (!std::filesystem::exists(m.resolve(*rel))) {
        throw IoError("manifest entry '" + e.id + "': missing file " + m.resolve(*rel).string());
      }
    }
  }
  return m;
}

}  // namespace frr::data
