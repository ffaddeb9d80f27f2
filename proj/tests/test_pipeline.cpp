// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "frr/core/error.hpp"
#include "frr/core/image.hpp"
#include "frr/data/builder.hpp"
#include "frr/data/face_synth.hpp"
#include "frr/data/loader.hpp"
#include "frr/data/retouch.hpp"
#include "frr/denoiser/checkpoint.hpp"
#include "frr/metrics/quality.hpp"
#include "frr/pipeline/commands.hpp"
#include "frr/pipeline/config.hpp"
#include "frr/pipeline/run.hpp"
#include "support.hpp"

using namespace frr;
using namespace frr::pipeline;
namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;

namespace {

// 20 simulator pairs at 128 x 128 (16 train / 4 test), built once.
const fs::path& shared_manifest() {
  static const fs::path path = [] {
    const auto dir = testing::scratch_dir("pipeline_dataset");
    data::write_synthetic_faces(dir / "faces", 20, 300, 128);
    data::BuildOptions o;
    o.source_dir = dir / "faces";
    o.out_dir = dir / "dataset";
    data::build_dataset(o);
    return o.out_dir / data::kManifestFileName;
  }();
  return path;
}

// A fast run: short schedule, few iterations, untrained SR back-end.
RunConfig fast_config(const std::string& name) {
  RunConfig c = RunConfig::desk();
  c.artifacts_dir = testing::scratch_dir("pipeline_" + name);
  c.run_id = name;
  c.dataset.manifest = shared_manifest();
  c.schedule = diffusion::ScheduleSpec{50, 1e-4, 0.2, "linear"};
  c.stage1.iterations = 20;
  c.stage1.checkpoint_interval = 10;
  c.stage2.iterations = 0;
  return c;
}

std::vector<std::array<double, 3>> read_loss_table(const fs::path& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  std::vector<std::array<double, 3>> rows;
  std::array<double, 3> r{};
  while (in >> r[0] >> r[1] >> r[2]) rows.push_back(r);
  return rows;
}

std::string slurp(const fs::path& p) {
  const auto b = read_bytes(p);
  return {b.begin(), b.end()};
}

const diffusion::EpsPredictor kZeroPredictor = [](const torch::Tensor& x, const torch::Tensor&, const torch::Tensor&) {
  return torch::zeros_like(x);
};

}  // namespace

TEST_CASE("run config parses, resolves paths and serializes", "[pipeline][config]") {
  const auto dir = testing::scratch_dir("pipeline_config");
  const std::string text = R"({
    "format_version": 1, "run_id": "r1", "seed": 5, "artifacts_dir": "out",
    "dataset": {"manifest": "data/manifest.jsonl", "split": "train"},
    "denoiser": {"working_resolution": 32},
    "sr": {"backend": "bicubic"},
    "training": {"stage1": {"iterations": 7}},
    "eval": {"embedders": ["randproj"]}
  })";
  const auto c = parse_config(text, dir);
  CHECK(c.run_id == "r1");
  CHECK(c.seed == 5);
  CHECK(c.artifacts_dir == dir / "out");
  CHECK(c.dataset.manifest == dir / "data/manifest.jsonl");
  CHECK(c.dataset.split == data::Split::train);
  CHECK(c.sr_backend == "bicubic");
  CHECK(c.stage1.iterations == 7);
  CHECK(c.stage1.batch_size == 8);
  CHECK(c.eval_resolution() == 128);
  const auto again = parse_config(serialize_config(c), "/elsewhere");
  CHECK(serialize_config(again) == serialize_config(c));
  CHECK(config_differences(c, again).empty());

  auto bad = RunConfig::desk();
  bad.eval.resolution = 64;
  CHECK_THROWS_AS(validate_config(bad, false), ConfigError);
  bad = RunConfig::desk();
  bad.run_id = "../escape";
  CHECK_THROWS_AS(validate_config(bad, false), ConfigError);
  bad = RunConfig::desk();
  bad.sr_backend = "esrgan";
  try {
    validate_config(bad, false);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bicubic") != std::string::npos);
  }
  CHECK_NOTHROW(validate_config(RunConfig::paper_scale(), false));
  CHECK(RunConfig::paper_scale().stage1.iterations == 1'500'000);
  CHECK(RunConfig::paper_scale().eval_resolution() == 512);
}

TEST_CASE("stage-1 training lowers the smoothed loss", "[pipeline][train][slow]") {
  auto c = fast_config("train200");
  c.schedule = diffusion::ScheduleSpec{};
  c.stage1.iterations = 200;
  c.stage1.checkpoint_interval = 50;
  const auto ckpt = cmd_train_stage1(c);
  CHECK(ckpt.filename() == "ckpt_00000200.frr");
  const auto rows = read_loss_table(c.artifacts_dir / "train200" / "stage1" / "loss.tsv");
  REQUIRE(rows.size() == 200);
  CHECK(rows.back()[2] < rows[19][2]);
  std::size_t kept = 0;
  for (const auto& de : fs::directory_iterator(ckpt.parent_path())) kept += de.path().extension() == ".frr" ? 1 : 0;
  CHECK(kept == 2);
  const auto loaded = denoiser::load_checkpoint(ckpt);
  CHECK(loaded.step == 200);
  CHECK(fs::exists(c.artifacts_dir / "train200" / "logs" / "train-stage1.log"));
  CHECK(fs::exists(c.artifacts_dir / "train200" / "config.json"));
}

TEST_CASE("interrupted training resumes bit for bit", "[pipeline][train]") {
  auto interrupted = fast_config("resume_a");
  auto straight = fast_config("resume_b");
  interrupted.stage1.iterations = straight.stage1.iterations = 30;

  cmd_train_stage1(interrupted, {false, 15});
  const auto dir = interrupted.artifacts_dir / "resume_a" / "stage1";
  CHECK(latest_checkpoint(dir)->filename() == "ckpt_00000015.frr");
  CHECK_THROWS_AS(cmd_train_stage1(interrupted), ConfigError);
  const auto resumed = cmd_train_stage1(interrupted, {true, -1});
  const auto reference = cmd_train_stage1(straight);
  CHECK(resumed.filename() == "ckpt_00000030.frr");
  CHECK(slurp(dir / "loss.tsv") == slurp(straight.artifacts_dir / "resume_b" / "stage1" / "loss.tsv"));
  const auto a = denoiser::load_checkpoint(resumed, WeightSelection::averaged_if_available);
  const auto b = denoiser::load_checkpoint(reference, WeightSelection::averaged_if_available);
  CHECK(a.step == 30);
  const auto pa = a.model()->parameters(), pb = b.model()->parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i].equal(pb[i]));
  CHECK(slurp(resumed) == slurp(reference));

  SECTION("a finished run resumes as a no-op") {
    CHECK(cmd_train_stage1(interrupted, {true, -1}) == resumed);
  }
  SECTION("a different schedule is refused") {
    auto changed = interrupted;
    changed.schedule.steps = 40;
    try {
      cmd_train_stage1(changed, {true, -1});
      FAIL("expected CheckpointError");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("fingerprint") != std::string::npos);
    }
  }
  SECTION("other config changes are refused") {
    auto changed = interrupted;
    changed.stage1.learning_rate = 1e-3;
    CHECK_THROWS_AS(cmd_train_stage1(changed, {true, -1}), ConfigError);
  }
}

TEST_CASE("inference is reproducible and validates its inputs", "[pipeline][infer]") {
  auto c = fast_config("infer");
  cmd_train_stage1(c);
  const auto inputs = testing::scratch_dir("pipeline_infer_inputs");
  write_png(inputs / "big.png", data::render_synthetic_face(1, 128).image);
  write_png(inputs / "small.png", data::render_synthetic_face(2, 48).image);
  write_png(inputs / "tiny.png", data::render_synthetic_face(3, 16).image);
  write_png(inputs / "wide.png", torch::zeros({3, 40, 64}));

  const auto first = cmd_infer(c, inputs);
  const auto second = cmd_infer(c, inputs);
  CHECK(first.dir.filename() == "001");
  CHECK(second.dir.filename() == "002");
  REQUIRE(first.run.outputs.size() == 2);
  CHECK(first.run.outputs[0].id == "big");
  REQUIRE(first.run.failures.size() == 2);
  CHECK(first.run.failures[0].id == "tiny");
  CHECK(first.run.failures[1].id == "wide");
  for (const auto& o : first.run.outputs) {
    CHECK(o.stage1.sizes() == torch::IntArrayRef({3, 32, 32}));
    CHECK(o.final.sizes() == torch::IntArrayRef({3, 128, 128}));
    for (const char* sub : {"stage1", "final"}) {
      const auto name = o.id + ".png";
      CHECK(read_bytes(first.dir / sub / name) == read_bytes(second.dir / sub / name));
    }
  }
  CHECK(fs::exists(first.dir / "summary.json"));

  SECTION("default inputs are the retouched test split") {
    const auto split = cmd_infer(c);
    CHECK(split.run.outputs.size() == 4);
    CHECK(split.run.failures.empty());
  }
  SECTION("a run without stage-2 weights is refused when stage 2 is configured") {
    auto needs_sr = fast_config("infer_nosr");
    needs_sr.stage2.iterations = 5;
    cmd_train_stage1(needs_sr);
    CHECK_THROWS_AS(cmd_infer(needs_sr, inputs), ConfigError);
  }
}

TEST_CASE("oracle predictor drives the pipeline to the clean faces", "[pipeline][infer]") {
  const diffusion::NoiseSchedule s(diffusion::ScheduleSpec{});
  std::vector<InferenceImage> images;
  std::vector<torch::Tensor> conds, targets;
  for (int i = 0; i < 3; ++i) {
    const auto raw = data::render_synthetic_face(40 + static_cast<std::uint64_t>(i), 32).image;
    const auto ret = quantize_8bit(data::synthetic_retouch(raw, data::default_retouch_spec(), 1));
    images.push_back({"f" + std::to_string(i), ret});
    conds.push_back(to_model_space(ret));
    targets.push_back(to_model_space(raw));
  }
  const auto backend = sr::make_sr_backend("bicubic", sr::BackendArgs{sr::SRConfig::desk(), std::nullopt, 0});
  const auto run = run_two_stage(images, testing::oracle_predictor(torch::stack(conds), torch::stack(targets), s), s,
                                 *backend, 32, 3, 2);
  REQUIRE(run.outputs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const double p = metrics::psnr(run.outputs[static_cast<std::size_t>(i)].stage1, to_file_space(targets[static_cast<std::size_t>(i)]));
    INFO("image " << i << " PSNR " << p);
    CHECK(p >= 30.0);
  }
}

TEST_CASE("resolution chains 32 to 128 and 128 to 512", "[pipeline][infer]") {
  const diffusion::NoiseSchedule s(diffusion::ScheduleSpec{10, 1e-4, 0.2, "linear"});
  const auto hat = sr::make_sr_backend("hat", sr::BackendArgs{sr::SRConfig::desk(), std::nullopt, 0});
  const auto small = run_two_stage({{"a", data::render_synthetic_face(1, 64).image}}, kZeroPredictor, s, *hat, 32, 0, 1);
  REQUIRE(small.outputs.size() == 1);
  CHECK(small.outputs[0].stage1.sizes() == torch::IntArrayRef({3, 32, 32}));
  CHECK(small.outputs[0].final.sizes() == torch::IntArrayRef({3, 128, 128}));
  const auto large = run_two_stage({{"b", data::render_synthetic_face(1, 128).image}}, kZeroPredictor, s, *hat, 128, 0, 1);
  REQUIRE(large.outputs.size() == 1);
  CHECK(large.outputs[0].stage1.sizes() == torch::IntArrayRef({3, 128, 128}));
  CHECK(large.outputs[0].final.sizes() == torch::IntArrayRef({3, 512, 512}));
  const auto refused = run_two_stage({{"c", data::render_synthetic_face(1, 64).image}}, kZeroPredictor, s, *hat, 128, 0, 1);
  CHECK(refused.outputs.empty());
  CHECK(refused.failures.size() == 1);
}

TEST_CASE("evaluation against copies of the references", "[pipeline][evaluate]") {
  auto c = fast_config("evaluate");
  const auto manifest = data::load_manifest(shared_manifest());
  const auto raw_dir = testing::scratch_dir("pipeline_eval_raw");
  const auto ret_dir = testing::scratch_dir("pipeline_eval_ret");
  const auto tests = manifest.split(data::Split::test);
  for (const auto* e : tests) {
    fs::copy_file(manifest.resolve(e->raw_path), raw_dir / (e->id + ".png"));
    fs::copy_file(manifest.resolve(e->retouched_path), ret_dir / (e->id + ".png"));
  }

  const auto identical = cmd_evaluate(c, raw_dir);
  CHECK(identical.resolution == 128);
  CHECK(identical.candidate.aggregate.count == tests.size());
  CHECK_THAT(identical.candidate.aggregate.ssim, WithinAbs(1.0, 1e-12));
  CHECK(std::isinf(identical.candidate.aggregate.psnr));

  const auto same_as_baseline = cmd_evaluate(c, ret_dir);
  CHECK(same_as_baseline.candidate.aggregate.ssim == same_as_baseline.baseline.aggregate.ssim);
  CHECK(same_as_baseline.candidate.aggregate.psnr == same_as_baseline.baseline.aggregate.psnr);
  CHECK(same_as_baseline.candidate.aggregate.embed_sim == same_as_baseline.baseline.aggregate.embed_sim);
  CHECK(fs::exists(same_as_baseline.dir / "density.png"));
  CHECK(fs::exists(same_as_baseline.dir / "baseline.tsv"));

  // Hand computation over three of the pairs, with the fourth missing.
  fs::remove(ret_dir / (tests[3]->id + ".png"));
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto raw = read_image(manifest.resolve(tests[static_cast<std::size_t>(i)]->raw_path));
    const auto ret = read_image(manifest.resolve(tests[static_cast<std::size_t>(i)]->retouched_path));
    psnr_sum += metrics::psnr(raw, ret);
    ssim_sum += metrics::ssim(raw, ret);
  }
  const auto partial = cmd_evaluate(c, ret_dir);
  CHECK(partial.candidate.aggregate.count == 3);
  REQUIRE(partial.candidate.failures.size() == 1);
  CHECK(partial.candidate.failures[0].id == tests[3]->id);
  CHECK_THAT(partial.candidate.aggregate.psnr, WithinAbs(psnr_sum / 3.0, 1e-9));
  CHECK_THAT(partial.candidate.aggregate.ssim, WithinAbs(ssim_sum / 3.0, 1e-12));

  // 128-pixel candidates cannot be scored at 32.
  CHECK_THROWS_AS(cmd_evaluate(c, raw_dir, 32), InvalidArgument);
}

TEST_CASE("ablation over the working resolution", "[pipeline][ablate][slow]") {
  auto c = fast_config("ablate");
  c.stage1.iterations = 2;
  c.stage1.checkpoint_interval = 2;
  c.schedule = diffusion::ScheduleSpec{10, 1e-4, 0.2, "linear"};
  const auto result = cmd_ablate(c, "downsample", {"32", "64"});
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].config.denoiser.working_resolution == 32);
  CHECK(result.rows[1].config.denoiser.working_resolution == 64);
  CHECK(result.rows[1].config.eval_resolution() == 256);
  CHECK(config_differences(result.rows[0].config, result.rows[1].config) ==
        std::vector<std::string>{"denoiser/working_resolution"});
  CHECK(result.rows[0].candidate.count == 4);
  CHECK(result.rows[0].baseline.ssim != result.rows[1].baseline.ssim);
  CHECK(fs::exists(result.dir / "table.tsv"));
  CHECK(fs::exists(result.dir / "table.json"));

  try {
    cmd_ablate(c, "sr-backend", {"esrgan"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("hat") != std::string::npos);
    CHECK(std::string(e.what()).find("bicubic") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_ablate(c, "learning-rate", {"1"}), ConfigError);
}

TEST_CASE("frrctl reports errors as one JSON line", "[pipeline][cli]") {
  const auto dir = testing::scratch_dir("pipeline_cli");
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FRRCTL_PATH) + " --config " + (dir / "missing.json").string() +
                          " train-stage1 2> " + err.string() + " > " + (dir / "stdout.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  const auto text = slurp(err);
  std::istringstream lines(text);
  std::string line, error_line;
  while (std::getline(lines, line)) {
    if (line.rfind("{\"error\"", 0) == 0) error_line = line;
  }
  const auto j = nlohmann::json::parse(error_line);
  CHECK(j["error"]["kind"] == "config_error");
  CHECK(j["error"]["message"].get<std::string>().find("missing.json") != std::string::npos);

  const std::string usage = std::string(FRRCTL_PATH) + " frobnicate 2> " + err.string();
  const int usage_status = std::system(usage.c_str());
  CHECK(WEXITSTATUS(usage_status) == 2);
}
