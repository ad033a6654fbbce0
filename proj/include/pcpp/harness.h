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

#ifndef PCPP_HARNESS_H_
#define PCPP_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcpp/accounting.h"
#include "pcpp/config.h"
#include "pcpp/protocol/simulation.h"
#include "pcpp/tensor.h"

namespace pcpp {

// Peak signal-to-noise ratio in dB; +infinity when the tensors are equal.
double psnr(const LatentTensor& a, const LatentTensor& b, double max_value);

struct QualityReport {
  std::string scheme;
  int devices = 1;
  double partial = 0.0;
  int warmup_steps = 0;
  std::uint64_t seed = 0;
  // Peak used for PSNR: max |x| of the serial output.
  double max_value = 0.0;
  double psnr_vs_serial = 0.0;
  double seam_score = 0.0;
  // Seam score of the serial output under the same layout.
  double serial_seam_score = 0.0;
  // Max-abs difference to the serial trajectory after each iteration.
  std::vector<double> divergence;
  std::int64_t total_bytes = 0;
  std::int64_t warmup_bytes = 0;
  std::int64_t async_bytes = 0;
  std::int64_t attention_bytes = 0;
  FlopBreakdown step_flops;
  std::size_t trace_events = 0;
  bool trace_valid = true;
};

struct ExperimentResult {
  QualityReport report;
  ParallelResult run;
  LatentTensor serial_image;
};

// Runs the serial oracle and the configured scheme from the same seed and
// noise. With write_artifacts, trace.jsonl, ledger.csv and report.json are
// written to cfg.output_dir. A protocol or deadlock error still writes the
// partial trace before propagating.
ExperimentResult run_experiment(const RunConfig& cfg, bool write_artifacts = false);

enum class SweepAxis { kPartial, kDevices, kWarmup, kScheme };

SweepAxis parse_axis(const std::string& name);
std::string_view axis_name(SweepAxis axis);

std::vector<QualityReport> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values);

std::string report_json(const QualityReport& report);
void write_ledger_csv(std::ostream& out, const CommLedger& ledger);
void write_sweep_csv(std::ostream& out, const std::vector<QualityReport>& reports);

}  // namespace pcpp

#endif  // PCPP_HARNESS_H_
