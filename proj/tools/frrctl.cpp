// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end of the two-stage pipeline. Every command prints one
// JSON line on stdout when it succeeds; on failure it prints
//   {"error":{"kind":"<kind>","message":"<text>"}}
// on stderr and exits nonzero (2 for usage and configuration errors, 1
// otherwise).
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frr/core/error.hpp"
#include "frr/data/face_synth.hpp"
#include "frr/data/manifest.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/config.hpp"

namespace {

namespace fs = std::filesystem;
using namespace frr;

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << std::endl;
  return code;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json aggregate(const metrics::AggregateMetrics& a) {
  // JSON has no infinity; identical pairs report "inf" as the written reports do.
  const auto psnr = std::isinf(a.psnr) ? nlohmann::json("inf") : nlohmann::json(a.psnr);
  return {{"count", a.count}, {"psnr", psnr}, {"ssim", a.ssim}, {"embed_sim", a.embed_sim}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage face retouching restoration pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool resume = false;
  std::string backend;
  app.add_option("--config", config_path, "Run config (JSON); desk defaults when omitted");
  app.add_option("--seed", seed, "Override the run seed");
  app.add_option("--out-dir", out_dir, "Override the artifacts directory (synth-faces: output directory)");
  app.add_flag("--resume", resume, "Continue training from the newest checkpoint");
  app.add_option("--backend", backend, "Dataset back-end for build-dataset, SR back-end otherwise");

  auto* build = app.add_subcommand("build-dataset", "Retouch the source images and write the manifest");
  auto* train1 = app.add_subcommand("train-stage1", "Train the conditional diffusion restorer");
  auto* train2 = app.add_subcommand("train-stage2", "Fine-tune the super-resolution generator");
  auto* infer = app.add_subcommand("infer", "Run both stages on the evaluation split or a directory");
  std::string input_dir;
  infer->add_option("--input-dir", input_dir, "Images to restore (default: retouched images of the split)");
  auto* evaluate = app.add_subcommand("evaluate", "Score candidates against raw images and the baseline");
  std::string candidates;
  std::int64_t resolution = 0;
  evaluate->add_option("--candidates", candidates, "Directory of <id>.png candidates")->required();
  evaluate->add_option("--resolution", resolution, "Scoring side (default: configured eval resolution)");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate one run per axis value");
  std::string axis, values;
  ablate->add_option("--axis", axis, "downsample or sr-backend")->required();
  ablate->add_option("--values", values, "Comma-separated axis values")->required();
  auto* synth = app.add_subcommand("synth-faces", "Render synthetic face images");
  std::int64_t count = 80, size = 128;
  std::uint64_t first_seed = 1000;
  synth->add_option("--count", count, "Number of faces");
  synth->add_option("--size", size, "Side in pixels");
  synth->add_option("--first-seed", first_seed, "Seed of the first face; later faces use consecutive seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 2);
  }

  try {
    if (*synth) {
      if (out_dir.empty()) throw ConfigError("synth-faces needs --out-dir");
      data::write_synthetic_faces(out_dir, count, seed.value_or(first_seed), size);
      std::cout << nlohmann::json{{"dir", out_dir}, {"count", count}, {"size", size}}.dump() << std::endl;
      return 0;
    }

    auto config = config_path.empty() ? pipeline::RunConfig::desk() : pipeline::load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.artifacts_dir = fs::absolute(out_dir);
    if (!backend.empty()) {
      if (*build) {
        if (!config.dataset.build) throw ConfigError("the run config has no dataset.build section");
        config.dataset.build->backend = backend;
      } else {
        config.sr_backend = backend;
      }
    }
    const pipeline::TrainOptions train_options{resume};

    nlohmann::json out;
    if (*build) {
      const auto path = pipeline::cmd_build_dataset(config);
      const auto manifest = data::load_manifest(path);
      out = {{"manifest", path.string()},
             {"pairs", manifest.entries.size()},
             {"train", manifest.count(data::Split::train)},
             {"test", manifest.count(data::Split::test)}};
    } else if (*train1) {
      out = {{"checkpoint", pipeline::cmd_train_stage1(config, train_options).string()}};
    } else if (*train2) {
      const auto path = pipeline::cmd_train_stage2(config, train_options);
      out = {{"checkpoint", path ? nlohmann::json(path->string()) : nlohmann::json(nullptr)}};
    } else if (*infer) {
      const auto result =
          pipeline::cmd_infer(config, input_dir.empty() ? std::nullopt : std::optional<fs::path>(input_dir));
      out = {{"dir", result.dir.string()},
             {"written", result.run.outputs.size()},
             {"failures", result.run.failures.size()}};
    } else if (*evaluate) {
      const auto result = pipeline::cmd_evaluate(config, candidates, resolution);
      out = {{"dir", result.dir.string()},
             {"resolution", result.resolution},
             {"candidate", aggregate(result.candidate.aggregate)},
             {"baseline", aggregate(result.baseline.aggregate)},
             {"candidate_failures", result.candidate.failures.size()}};
    } else if (*ablate) {
      const auto result = pipeline::cmd_ablate(config, axis, split_list(values));
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : result.rows) rows.push_back({{"value", r.value}, {"candidate", aggregate(r.candidate)}});
      out = {{"dir", result.dir.string()}, {"axis", result.axis}, {"rows", rows}};
    }
    std::cout << out.dump() << std::endl;
    return 0;
  } catch (const ConfigError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), 1);
  }
}
