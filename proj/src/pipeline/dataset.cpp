// SPDX-License-Identifier: Apache-2.0
#include <spdlog/spdlog.h>

#include "frr/core/error.hpp"
#include "frr/data/builder.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/run.hpp"

namespace frr::pipeline {

std::filesystem::path cmd_build_dataset(const RunConfig& config) {
  if (!config.dataset.build) throw ConfigError("the run config has no dataset.build section");
  validate_config(config, false);
  auto options = *config.dataset.build;
  if (options.out_dir.empty()) {
    options.out_dir = config.dataset.manifest.empty() ? config.artifacts_dir / config.run_id / "dataset"
                                                      : config.dataset.manifest.parent_path();
  }
  data::validate_build_options(options);
  const auto manifest_path = options.out_dir / data::kManifestFileName;
  if (!config.dataset.manifest.empty() && config.dataset.manifest != manifest_path) {
    throw ConfigError("dataset.manifest " + config.dataset.manifest.string() + " is not where the build writes (" +
                      manifest_path.string() + ")");
  }

  RunContext ctx(config, "build-dataset");
  const auto manifest = data::build_dataset(options);
  const auto train = manifest.count(data::Split::train);
  const auto test = manifest.count(data::Split::test);
  ctx.record({{"event", "dataset_built"},
              {"manifest", manifest_path.string()},
              {"backend", options.backend},
              {"pairs", manifest.entries.size()},
              {"train", train},
              {"test", test},
              {"resolution", manifest.source_resolution}});
  spdlog::info("build-dataset: {} pairs, {} train / {} test, resolution {}", manifest.entries.size(), train, test,
               manifest.source_resolution);
  return manifest_path;
}

}  // namespace frr::pipeline
