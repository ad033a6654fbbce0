/* Copyright 2026 The PCPP Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "pcpp/config.h"
#include "pcpp/error.h"
#include "pcpp/harness.h"
#include "test_util.h"

namespace pcpp {
namespace {

using testing::random_latent;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pcpp_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.sampler.steps = 6;
  cfg.warmup_steps = 2;
  cfg.devices = 4;
  cfg.partial = 0.3;
  cfg.seed = 3;
  return cfg;
}

TEST(Psnr, EqualTensorsGiveInfinity) {
  const auto a = random_latent(4, 4, 2, 1);
  EXPECT_EQ(psnr(a, a, 1.0), std::numeric_limits<double>::infinity());
}

TEST(Psnr, ClosedForms) {
  LatentTensor a(1, 1, 4, 0.0), b(1, 1, 4, 0.1);
  EXPECT_NEAR(psnr(a, b, 1.0), 20.0, 1e-12);
  LatentTensor c(1, 1, 1, 0.0), d(1, 1, 1, std::sqrt(65.025));
  EXPECT_NEAR(psnr(c, d, 255.0), 20 * std::log10(255.0) - 10 * std::log10(65.025), 1e-12);
  EXPECT_NEAR(psnr(c, d, 255.0), 29.999, 1e-3);
}

TEST(Psnr, SymmetricAndValidated) {
  const auto a = random_latent(4, 4, 2, 2), b = random_latent(4, 4, 2, 3);
  EXPECT_EQ(psnr(a, b, 3.0), psnr(b, a, 3.0));
  EXPECT_THROW(psnr(a, LatentTensor(4, 4, 3), 1.0), ShapeError);
  EXPECT_THROW(psnr(a, b, 0.0), InvalidConfig);
}

TEST(Config, TextRoundTrip) {
  RunConfig cfg = small_config();
  cfg.scheme = SchemeKind::kDistriFusion;
  cfg.policy = "random:9";
  cfg.sampler.variant = SamplerVariant::kDdpmAncestral;
  cfg.guidance.scale = 3.25;
  cfg.prompt_id = -4;
  const RunConfig back = parse_config(to_config_text(cfg));
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(to_config_text(back), to_config_text(cfg));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("{"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"devices": 2})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 2})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "devices": 3})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "devices": "four"})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "model": {"depth": 3}})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "warmup_steps": 0})"), InvalidConfig);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "partial": 1.5})"), InvalidConfig);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidConfig);
}

TEST(Config, DefaultsAndDefaultPartial) {
  const RunConfig cfg = parse_config(R"({"schema_version": 1})");
  EXPECT_EQ(cfg.sampler.steps, 50);
  EXPECT_EQ(cfg.guidance.scale, 5.0);
  EXPECT_EQ(cfg.warmup_steps, 4);
  EXPECT_EQ(cfg.model.height, 16);
  EXPECT_EQ(cfg.model.channels, 8);
  EXPECT_EQ(cfg.model.layer_count(), 6);
  EXPECT_EQ(default_partial(2, GuidanceConfig{}), 0.3);
  EXPECT_EQ(default_partial(4, GuidanceConfig{}), 0.8);
  EXPECT_EQ(default_partial(4, GuidanceConfig{5.0, false}), 0.3);
  EXPECT_EQ(cfg.effective_partial(), 0.8);
}

TEST(RunExperiment, SerialSchemeIsInfinitePsnr) {
  RunConfig cfg = small_config();
  cfg.scheme = SchemeKind::kSerial;
  const auto r = run_experiment(cfg);
  EXPECT_TRUE(std::isinf(r.report.psnr_vs_serial));
  EXPECT_EQ(r.report.total_bytes, 0);
  EXPECT_EQ(r.report.seam_score, r.report.serial_seam_score);
}

TEST(RunExperiment, DivergenceIsZeroDuringWarmup) {
  for (SchemeKind kind : {SchemeKind::kPcpp, SchemeKind::kDistriFusion}) {
    RunConfig cfg = small_config();
    cfg.scheme = kind;
    const auto r = run_experiment(cfg);
    ASSERT_EQ(r.report.divergence.size(), 6u);
    EXPECT_EQ(r.report.divergence[0], 0.0);
    EXPECT_EQ(r.report.divergence[1], 0.0);
    EXPECT_GT(r.report.divergence[2], 0.0);
    EXPECT_TRUE(std::isfinite(r.report.psnr_vs_serial));
    EXPECT_TRUE(r.report.trace_valid);
  }
}

TEST(RunExperiment, FullContextTwoDevicesAllWarmupIsExact) {
  RunConfig cfg = small_config();
  cfg.devices = 2;
  cfg.partial = 1.0;
  cfg.warmup_steps = cfg.sampler.steps;
  const auto r = run_experiment(cfg);
  EXPECT_GE(r.report.psnr_vs_serial, 180.0);
}

TEST(RunExperiment, ArtifactsAreReproducible) {
  const auto dir_a = scratch("a"), dir_b = scratch("b");
  RunConfig cfg = small_config();
  cfg.output_dir = dir_a.string();
  run_experiment(cfg, true);
  cfg.output_dir = dir_b.string();
  run_experiment(cfg, true);
  for (const char* name : {"trace.jsonl", "ledger.csv", "report.json"}) {
    EXPECT_FALSE(slurp(dir_a / name).empty()) << name;
    EXPECT_EQ(slurp(dir_a / name), slurp(dir_b / name)) << name;
  }
  const RunConfig reloaded = load_config((dir_a / "config.json").string());
  EXPECT_EQ(reloaded.seed, cfg.seed);
  EXPECT_EQ(reloaded.partial, cfg.partial);
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST(RunExperiment, InfinitePsnrSerializedAsString) {
  RunConfig cfg = small_config();
  cfg.scheme = SchemeKind::kSerial;
  EXPECT_NE(report_json(run_experiment(cfg).report).find("\"psnr_vs_serial\": \"inf\""), std::string::npos);
}

TEST(Sweep, DevicesReduceModeledFlops) {
  RunConfig cfg = small_config();
  cfg.sampler.steps = 2;
  cfg.warmup_steps = 1;
  cfg.partial = 1.0;
  const auto reports = sweep(cfg, SweepAxis::kDevices, {"1", "2", "4", "8"});
  ASSERT_EQ(reports.size(), 4u);
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_LT(reports[i].step_flops.total(), reports[i - 1].step_flops.total());
  }
}

TEST(Sweep, PcppSendsLessThanAllGather) {
  RunConfig cfg = small_config();
  cfg.sampler.steps = 3;
  cfg.warmup_steps = 1;
  for (int n : {4, 8}) {
    cfg.devices = n;
    const auto reports = sweep(cfg, SweepAxis::kScheme, {"distrifusion", "pcpp"});
    EXPECT_LT(reports[1].total_bytes, reports[0].total_bytes);
  }
}

TEST(Sweep, PartialTrendIsReported) {
  RunConfig cfg = small_config();
  cfg.devices = 2;
  const auto reports = sweep(cfg, SweepAxis::kPartial, {"0", "0.5", "1"});
  ASSERT_EQ(reports.size(), 3u);
  std::ostringstream csv;
  write_sweep_csv(csv, reports);
  EXPECT_NE(csv.str().find("pcpp_p2p,2,0.5,2,3,"), std::string::npos);
}

TEST(Sweep, RejectsBadValues) {
  const RunConfig cfg = small_config();
  EXPECT_THROW(sweep(cfg, SweepAxis::kDevices, {"3"}), InvalidConfig);
  EXPECT_THROW(sweep(cfg, SweepAxis::kPartial, {"lots"}), InvalidConfig);
  EXPECT_THROW(parse_axis("height"), InvalidConfig);
}

}  // namespace
}  // namespace pcpp
