// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include <spdlog/spdlog.h>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/run.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

void collect_differences(const nlohmann::json& a, const nlohmann::json& b, const std::string& path,
                         std::vector<std::string>& out) {
  if (a.is_object() && b.is_object()) {
    for (const auto& [key, value] : a.items()) {
      const auto child = path.empty() ? key : path + "/" + key;
      if (!b.contains(key)) {
        out.push_back(child);
      } else {
        collect_differences(value, b.at(key), child, out);
      }
    }
    for (const auto& [key, value] : b.items()) {
      if (!a.contains(key)) out.push_back(path.empty() ? key : path + "/" + key);
    }
  } else if (a != b) {
    out.push_back(path);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

RunConfig row_config(const RunConfig& base, const std::string& axis, const std::string& value,
                     const fs::path& manifest, const fs::path& axis_dir) {
  RunConfig row = base;
  row.run_id = value;
  row.artifacts_dir = axis_dir;
  row.dataset.manifest = manifest;
  if (axis == "downsample") {
    std::size_t used = 0;
    std::int64_t side = 0;
    try {
      side = std::stoll(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || side <= 0) throw ConfigError("downsample value '" + value + "' is not a positive integer");
    row.denoiser.working_resolution = side;
    row.eval.resolution = 0;
  } else {
    sr::require_sr_backend(value);
    row.sr_backend = value;
  }
  return row;
}

}  // namespace

std::vector<std::string> config_differences(const RunConfig& a, const RunConfig& b) {
  nlohmann::json ja = a, jb = b;
  ja.erase("run_id");
  jb.erase("run_id");
  std::vector<std::string> out;
  collect_differences(ja, jb, "", out);
  return out;
}

AblationResult cmd_ablate(const RunConfig& config, const std::string& axis, const std::vector<std::string>& values) {
  if (axis != "downsample" && axis != "sr-backend") {
    throw ConfigError("unknown ablation axis '" + axis + "' (expected downsample or sr-backend)");
  }
  if (values.empty()) throw ConfigError("ablation axis '" + axis + "' needs at least one value");
  validate_config(config, true);

  AblationResult result;
  result.axis = axis;
  fs::path manifest;
  {
    RunContext ctx(config, "ablate");
    manifest = fs::absolute(ctx.manifest_path());
    result.dir = ctx.dir("ablate/" + axis);
  }
  if (!fs::exists(manifest)) throw ConfigError("dataset manifest " + manifest.string() + " does not exist");

  std::vector<RunConfig> rows;
  for (const auto& v : values) {
    auto row = row_config(config, axis, v, manifest, result.dir);
    validate_config(row, true);
    rows.push_back(std::move(row));
  }
  const std::string field = axis == "downsample" ? "denoiser/working_resolution" : "sr/backend";
  for (const auto& row : rows) {
    for (const auto& d : config_differences(rows.front(), row)) {
      if (d != field) throw ContractViolation("ablation rows differ in '" + d + "', not only in '" + field + "'");
    }
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    spdlog::info("ablate: {} = {} ({}/{})", axis, values[i], i + 1, rows.size());
    cmd_train_stage1(row, TrainOptions{true});
    cmd_train_stage2(row, TrainOptions{true});
    const auto infer = cmd_infer(row);
    const auto eval = cmd_evaluate(row, infer.dir / "final");
    result.rows.push_back({values[i], row, eval.candidate.aggregate, eval.baseline.aggregate});
  }

  std::vector<std::string> embedder_names;
  for (const auto& e : config.eval.embedders) embedder_names.push_back(e.name);
  std::ostringstream table;
  table << "axis\tvalue\tworking_resolution\teval_resolution\tsr_backend\tcount\tpsnr\tssim";
  for (const auto& n : embedder_names) table << '\t' << n;
  table << "\tbaseline_psnr\tbaseline_ssim\n";
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : result.rows) {
    table << axis << '\t' << r.value << '\t' << r.config.denoiser.working_resolution << '\t'
          << r.config.eval_resolution() << '\t' << r.config.sr_backend << '\t' << r.candidate.count << '\t'
          << fmt(r.candidate.psnr) << '\t' << fmt(r.candidate.ssim);
    for (const auto& n : embedder_names) {
      const auto it = r.candidate.embed_sim.find(n);
      table << '\t' << (it == r.candidate.embed_sim.end() ? std::string("nan") : fmt(it->second));
    }
    table << '\t' << fmt(r.baseline.psnr) << '\t' << fmt(r.baseline.ssim) << '\n';
    rows_json.push_back({{"value", r.value},
                         {"config", r.config},
                         {"candidate", {{"count", r.candidate.count}, {"psnr", r.candidate.psnr}, {"ssim", r.candidate.ssim}, {"embed_sim", r.candidate.embed_sim}}},
                         {"baseline", {{"count", r.baseline.count}, {"psnr", r.baseline.psnr}, {"ssim", r.baseline.ssim}, {"embed_sim", r.baseline.embed_sim}}}});
  }
  write_text_atomic(result.dir / "table.tsv", table.str());
  write_text_atomic(result.dir / "table.json",
                    nlohmann::json{{"axis", axis}, {"varied_field", field}, {"rows", rows_json}}.dump(2) + "\n");
  spdlog::info("ablate: table written to {}", (result.dir / "table.tsv").string());
  return result;
}

}  // namespace frr::pipeline
