// SPDX-License-Identifier: Apache-2.0
#include "frr/data/builder.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "frr/core/error.hpp"
#include "frr/core/hash.hpp"
#include "frr/core/image.hpp"
#include "frr/data/resample.hpp"

namespace frr::data {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (de.is_regular_file() && is_image_file(de.path())) files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<fs::path> find_by_stem(const fs::path& dir, const std::string& stem) {
  for (const auto& p : list_images(dir)) {
    if (p.stem().string() == stem) return p;
  }
  return std::nullopt;
}

struct Source {
  fs::path path;
  std::string id;
};

struct Built {
  bool ok = false;
  ManifestEntry entry;
  std::int64_t side = 0;
};

torch::Tensor conform(torch::Tensor img, std::int64_t resolution) {
  if (resolution > 0 && (img.size(1) != resolution || img.size(2) != resolution)) {
    img = quantize_8bit(resize_bicubic(img, resolution, resolution));
  }
  return img;
}

}  // namespace

void to_json(nlohmann::json& j, const BuildOptions& o) {
  j = {{"source_dir", o.source_dir.string()}, {"out_dir", o.out_dir.string()}, {"ops", o.ops},
       {"split_ratio", o.split_ratio},        {"seed", o.seed},                 {"backend", o.backend},
       {"retouched_dir", o.retouched_dir.string()}, {"resolution", o.resolution}, {"threads", o.threads}};
  if (o.api) j["api"] = *o.api;
}

void from_json(const nlohmann::json& j, BuildOptions& o) {
  const BuildOptions d;
  o.source_dir = j.value("source_dir", std::string{});
  o.out_dir = j.value("out_dir", std::string{});
  o.ops = j.contains("ops") ? j.at("ops").get<RetouchSpec>() : d.ops;
  o.split_ratio = j.value("split_ratio", d.split_ratio);
  o.seed = j.value("seed", d.seed);
  o.backend = j.value("backend", d.backend);
  if (j.contains("api") && !j.at("api").is_null()) o.api = j.at("api").get<ApiEndpointConfig>();
  o.retouched_dir = j.value("retouched_dir", std::string{});
  o.resolution = j.value("resolution", d.resolution);
  o.threads = j.value("threads", d.threads);
}

void validate_build_options(const BuildOptions& o) {
  if (o.backend != "simulator" && o.backend != "api" && o.backend != "preexisting") {
    throw ConfigError("unknown dataset backend '" + o.backend + "' (expected simulator, api or preexisting)");
  }
  if (o.backend == "api" && !o.api) throw ConfigError("dataset backend 'api' needs an endpoint configuration");
  if (o.backend == "preexisting" && o.retouched_dir.empty()) {
    throw ConfigError("dataset backend 'preexisting' needs retouched_dir");
  }
  if (!(o.split_ratio > 0.0 && o.split_ratio < 1.0)) throw ConfigError("split_ratio must lie strictly between 0 and 1");
  if (o.source_dir.empty() || !fs::is_directory(o.source_dir)) {
    throw ConfigError("source_dir '" + o.source_dir.string() + "' is not a directory");
  }
  if (o.out_dir.empty()) throw ConfigError("out_dir is required");
  if (o.resolution < 0) throw ConfigError("resolution must be non-negative");
  if (o.threads < 1) throw ConfigError("threads must be at least 1");
  for (const auto& step : o.ops) {
    if (step.level < 0 || step.level > 100) throw ConfigError("retouch levels must lie in [0, 100]");
  }
}

DatasetManifest build_dataset(const BuildOptions& o) {
  validate_build_options(o);
  fs::create_directories(o.out_dir / "raw");
  fs::create_directories(o.out_dir / "retouched");

  std::vector<Source> sources;
  std::map<std::string, int> seen;
  for (const auto& p : list_images(o.source_dir)) {
    auto id = p.stem().string();
    if (seen[id]++ > 0) id += "_" + p.extension().string().substr(1);
    sources.push_back({p, id});
  }

  std::vector<Built> built(sources.size());
  auto process = [&](std::size_t i) {
    const auto& src = sources[i];
    torch::Tensor raw;
    try {
      raw = conform(read_image(src.path), o.resolution);
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", src.path.string(), e.what());
      return;
    }
    if (raw.size(1) != raw.size(2)) {
      spdlog::warn("skipping {}: not square ({}x{})", src.path.string(), raw.size(2), raw.size(1));
      return;
    }
    const auto raw_png = encode_png(raw);
    ManifestEntry e;
    e.id = src.id;
    e.raw_path = "raw/" + src.id + ".png";
    e.retouched_path = "retouched/" + src.id + ".png";
    e.ops = o.ops;
    std::vector<std::uint8_t> ret_png;
    if (o.backend == "simulator") {
      const auto seed = stable_hash(o.seed, src.id);
      ret_png = encode_png(synthetic_retouch(raw, o.ops, seed));
      e.provenance = {"simulator", "", seed, 0, {}};
    } else if (o.backend == "api") {
      auto outcome = api_retouch(raw_png, o.ops, *o.api, src.id);
      ret_png = encode_png(decode_image(outcome.image));
      e.provenance = {"api", o.api->url, 0, outcome.attempts, outcome.statuses};
    } else {
      const auto match = find_by_stem(o.retouched_dir, src.path.stem().string());
      if (!match) {
        spdlog::warn("skipping {}: no retouched counterpart in {}", src.path.string(), o.retouched_dir.string());
        return;
      }
      torch::Tensor ret;
      try {
        ret = conform(read_image(*match), o.resolution);
      } catch (const Error& err) {
        spdlog::warn("skipping {}: {}", match->string(), err.what());
        return;
      }
      if (ret.sizes() != raw.sizes()) {
        spdlog::warn("skipping {}: retouched counterpart has a different size", src.path.string());
        return;
      }
      ret_png = encode_png(ret);
      e.provenance = {"preexisting", match->string(), 0, 0, {}};
    }
    write_bytes_atomic(o.out_dir / e.raw_path, raw_png);
    write_bytes_atomic(o.out_dir / e.retouched_path, ret_png);
    e.raw_sha256 = sha256_hex(raw_png);
    e.retouched_sha256 = sha256_hex(ret_png);
    built[i] = {true, std::move(e), raw.size(1)};
  };

  if (o.threads == 1 || sources.size() < 2) {
    for (std::size_t i = 0; i < sources.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    for (int t = 0; t < o.threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < sources.size(); i = next++) {
          try {
            process(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }

  DatasetManifest m;
  m.root = o.out_dir;
  m.split_ratio = o.split_ratio;
  m.split_seed = o.seed;
  m.source_resolution = o.resolution;
  for (auto& b : built) {
    if (!b.ok) continue;
    if (m.source_resolution == 0) m.source_resolution = b.side;
    if (b.side != m.source_resolution) {
      spdlog::warn("skipping {}: size {} differs from the dataset resolution {}", b.entry.id, b.side,
                   m.source_resolution);
      fs::remove(o.out_dir / b.entry.raw_path);
      fs::remove(o.out_dir / b.entry.retouched_path);
      continue;
    }
    m.entries.push_back(std::move(b.entry));
  }
  const auto labels = assign_split(m.entries.size(), o.split_ratio, o.seed);
  for (std::size_t i = 0; i < m.entries.size(); ++i) m.entries[i].split = labels[i];
  save_manifest(o.out_dir / kManifestFileName, m);
  spdlog::info("dataset: {} pairs ({} train, {} test) -> {}", m.entries.size(), m.count(Split::train),
               m.count(Split::test), (o.out_dir / kManifestFileName).string());
  return m;
}

}  // namespace frr::data
