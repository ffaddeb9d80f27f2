// SPDX-License-Identifier: Apache-2.0
#include "frr/pipeline/config.hpp"

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/diffusion/schedule.hpp"
#include "frr/sr/backend.hpp"

namespace frr::pipeline {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

void check_stage(const StageTraining& s, const std::string& name) {
  if (s.iterations < 0) throw ConfigError(name + ".iterations must be non-negative");
  if (s.batch_size < 1) throw ConfigError(name + ".batch_size must be at least 1");
  if (!(s.learning_rate > 0.0)) throw ConfigError(name + ".learning_rate must be positive");
  if (s.checkpoint_interval < 1) throw ConfigError(name + ".checkpoint_interval must be at least 1");
  if (s.keep_checkpoints < 1) throw ConfigError(name + ".keep_checkpoints must be at least 1");
  if (!(s.ema_decay >= 0.0 && s.ema_decay < 1.0)) throw ConfigError(name + ".ema_decay must lie in [0, 1)");
}

}  // namespace

RunConfig RunConfig::desk() { return RunConfig{}; }

RunConfig RunConfig::paper_scale() {
  RunConfig c;
  c.run_id = "paper-scale";
  c.denoiser = denoiser::DenoiserConfig::paper_scale();
  c.sr = sr::SRConfig::paper_scale();
  c.stage1.iterations = 1'500'000;
  c.stage1.checkpoint_interval = 10'000;
  c.stage2.iterations = 100'000;
  c.stage2.checkpoint_interval = 10'000;
  return c;
}

void to_json(nlohmann::json& j, const EmbedderSpec& e) {
  j = {{"name", e.name}, {"kind", e.kind}};
  if (e.kind == "random_projection") {
    j.update({{"dim", e.dim}, {"side", e.side}, {"seed", e.seed}});
  } else {
    j.update({{"path", e.path.string()}, {"input_size", e.input_size}, {"mean", e.mean}, {"std", e.std}});
  }
}

void from_json(const nlohmann::json& j, EmbedderSpec& e) {
  const EmbedderSpec d;
  if (j.is_string()) {
    e = d;
    e.name = j.get<std::string>();
    return;
  }
  e.name = j.value("name", d.name);
  e.kind = j.value("kind", d.kind);
  e.dim = j.value("dim", d.dim);
  e.side = j.value("side", d.side);
  e.seed = j.value("seed", d.seed);
  e.path = j.value("path", std::string{});
  e.input_size = j.value("input_size", d.input_size);
  e.mean = j.value("mean", d.mean);
  e.std = j.value("std", d.std);
}

void to_json(nlohmann::json& j, const StageTraining& s) {
  j = {{"iterations", s.iterations},
       {"batch_size", s.batch_size},
       {"learning_rate", s.learning_rate},
       {"checkpoint_interval", s.checkpoint_interval},
       {"keep_checkpoints", s.keep_checkpoints},
       {"ema_decay", s.ema_decay}};
}

void from_json(const nlohmann::json& j, StageTraining& s) {
  const StageTraining d = s;
  s.iterations = j.value("iterations", d.iterations);
  s.batch_size = j.value("batch_size", d.batch_size);
  s.learning_rate = j.value("learning_rate", d.learning_rate);
  s.checkpoint_interval = j.value("checkpoint_interval", d.checkpoint_interval);
  s.keep_checkpoints = j.value("keep_checkpoints", d.keep_checkpoints);
  s.ema_decay = j.value("ema_decay", d.ema_decay);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json dataset = {{"manifest", c.dataset.manifest.string()}, {"split", data::to_string(c.dataset.split)}};
  if (c.dataset.build) dataset["build"] = *c.dataset.build;
  j = {{"format_version", c.format_version},
       {"run_id", c.run_id},
       {"seed", c.seed},
       {"artifacts_dir", c.artifacts_dir.string()},
       {"dataset", dataset},
       {"schedule", c.schedule},
       {"denoiser", c.denoiser},
       {"sr", {{"backend", c.sr_backend}, {"config", c.sr}}},
       {"training", {{"stage1", c.stage1}, {"stage2", c.stage2}}},
       {"sampler", c.sampler},
       {"infer_batch", c.infer_batch},
       {"eval", {{"embedders", c.eval.embedders}, {"resolution", c.eval.resolution}}}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  c.format_version = j.value("format_version", -1);
  if (c.format_version != kConfigFormatVersion) {
    throw ConfigError("unsupported run config format_version " + std::to_string(c.format_version) + " (expected " +
                      std::to_string(kConfigFormatVersion) + ")");
  }
  c.run_id = j.value("run_id", c.run_id);
  c.seed = j.value("seed", c.seed);
  c.artifacts_dir = j.value("artifacts_dir", c.artifacts_dir.string());
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    c.dataset.manifest = d.value("manifest", std::string{});
    c.dataset.split = data::parse_split(d.value("split", std::string{"test"}));
    if (d.contains("build") && !d.at("build").is_null()) c.dataset.build = d.at("build").get<data::BuildOptions>();
  }
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<diffusion::ScheduleSpec>();
  if (j.contains("denoiser")) c.denoiser = j.at("denoiser").get<denoiser::DenoiserConfig>();
  if (j.contains("sr")) {
    const auto& s = j.at("sr");
    c.sr_backend = s.value("backend", c.sr_backend);
    if (s.contains("config")) c.sr = s.at("config").get<sr::SRConfig>();
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    if (t.contains("stage1")) from_json(t.at("stage1"), c.stage1);
    if (t.contains("stage2")) from_json(t.at("stage2"), c.stage2);
  }
  if (j.contains("sampler")) c.sampler = j.at("sampler").get<diffusion::SamplerOptions>();
  c.infer_batch = j.value("infer_batch", c.infer_batch);
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("embedders")) c.eval.embedders = e.at("embedders").get<std::vector<EmbedderSpec>>();
    c.eval.resolution = e.value("resolution", c.eval.resolution);
  }
}

void validate_config(const RunConfig& c, bool require_manifest) {
  if (c.format_version != kConfigFormatVersion) throw ConfigError("unsupported run config format_version");
  if (c.run_id.empty() || c.run_id.find_first_of("/\\") != std::string::npos || c.run_id == "." || c.run_id == "..") {
    throw ConfigError("run_id must be a non-empty plain directory name");
  }
  c.denoiser.validate();
  c.sr.validate();
  diffusion::NoiseSchedule check(c.schedule);
  (void)check;
  sr::require_sr_backend(c.sr_backend);
  if (c.eval.resolution != 0 && c.eval.resolution != c.eval_resolution()) {
    throw ConfigError("eval.resolution " + std::to_string(c.eval.resolution) + " must equal working_resolution " +
                      std::to_string(c.denoiser.working_resolution) + " x sr upscale " + std::to_string(c.sr.upscale));
  }
  check_stage(c.stage1, "training.stage1");
  check_stage(c.stage2, "training.stage2");
  if (c.infer_batch < 1) throw ConfigError("infer_batch must be at least 1");
  if (c.eval.embedders.empty()) throw ConfigError("eval.embedders must name at least one embedder");
  for (const auto& e : c.eval.embedders) {
    if (e.name.empty()) throw ConfigError("embedder names must be non-empty");
    if (e.kind == "random_projection") {
      if (e.dim < 1 || e.side < 1) throw ConfigError("embedder '" + e.name + "': dim and side must be positive");
    } else if (e.kind == "torchscript") {
      if (!fs::exists(e.path)) throw ConfigError("embedder '" + e.name + "': " + e.path.string() + " does not exist");
      if (e.input_size < 1) throw ConfigError("embedder '" + e.name + "': input_size must be positive");
    } else {
      throw ConfigError("embedder '" + e.name + "': unknown kind '" + e.kind +
                        "' (expected random_projection or torchscript)");
    }
  }
  if (require_manifest && !c.dataset.manifest.empty() && !fs::exists(c.dataset.manifest)) {
    throw ConfigError("dataset manifest " + c.dataset.manifest.string() + " does not exist");
  }
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    c = j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config has a malformed field: ") + e.what());
  }
  c.artifacts_dir = resolve(c.artifacts_dir, base_dir);
  c.dataset.manifest = resolve(c.dataset.manifest, base_dir);
  if (c.dataset.build) {
    auto& b = *c.dataset.build;
    b.source_dir = resolve(b.source_dir, base_dir);
    b.out_dir = resolve(b.out_dir, base_dir);
    b.retouched_dir = resolve(b.retouched_dir, base_dir);
  }
  for (auto& e : c.eval.embedders) e.path = resolve(e.path, base_dir);
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  const auto bytes = read_bytes(path);
  return parse_config(std::string(bytes.begin(), bytes.end()), fs::absolute(path).parent_path());
}

std::string serialize_config(const RunConfig& config) { return nlohmann::json(config).dump(2) + "\n"; }

metrics::EmbedderList make_embedders(const std::vector<EmbedderSpec>& specs) {
  metrics::EmbedderList out;
  for (const auto& e : specs) {
    if (e.kind == "random_projection") {
      out.push_back(std::make_shared<metrics::RandomProjectionEmbedder>(e.name, e.dim, e.side, e.seed));
    } else if (e.kind == "torchscript") {
      out.push_back(metrics::load_torchscript_embedder(e.name, e.path, e.input_size, e.mean, e.std));
    } else {
      throw ConfigError("embedder '" + e.name + "': unknown kind '" + e.kind + "'");
    }
  }
  return out;
}

}  // namespace frr::pipeline
