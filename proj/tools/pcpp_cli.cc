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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcpp/accounting.h"
#include "pcpp/config.h"
#include "pcpp/error.h"
#include "pcpp/harness.h"
#include "pcpp/protocol/fabric.h"
#include "pcpp/protocol/trace.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitProtocol = 2;
constexpr int kExitDeadlock = 3;

std::string format_gb(std::int64_t bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", static_cast<double>(bytes) / 1e9);
  return buf;
}

std::string format_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void print_summary(const pcpp::QualityReport& r) {
  std::cout << "scheme=" << r.scheme << " devices=" << r.devices << " partial=" << r.partial
            << " warmup=" << r.warmup_steps << " seed=" << r.seed << '\n'
            << "psnr_vs_serial_db=" << format_psnr(r.psnr_vs_serial) << " max_value=" << r.max_value << '\n'
            << "seam_score=" << r.seam_score << " serial_seam_score=" << r.serial_seam_score << '\n'
            << "bytes_total=" << r.total_bytes << " bytes_attention=" << r.attention_bytes
            << " step_flops=" << r.step_flops.total() << '\n'
            << "trace_events=" << r.trace_events << " trace_valid=" << (r.trace_valid ? "yes" : "no") << '\n';
}

int cmd_run(const std::string& config_path, const std::string& output) {
  pcpp::RunConfig cfg = pcpp::load_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  const pcpp::ExperimentResult result = pcpp::run_experiment(cfg, true);
  print_summary(result.report);
  std::cout << "artifacts=" << cfg.output_dir << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values,
              const std::string& output) {
  pcpp::RunConfig cfg = pcpp::load_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  std::vector<std::string> items;
  std::stringstream ss(values);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  if (items.empty()) throw pcpp::InvalidConfig("sweep needs at least one value");
  const auto reports = pcpp::sweep(cfg, pcpp::parse_axis(axis), items);
  std::ostringstream csv;
  pcpp::write_sweep_csv(csv, reports);
  std::cout << csv.str();
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream out(std::filesystem::path(cfg.output_dir) / "sweep.csv", std::ios::binary);
  if (!out) throw pcpp::Error("cannot write sweep.csv");
  out << csv.str();
  return 0;
}

int cmd_costs(int resolution, int devices, double gn_gb, double conv_gb, double attn_gb, bool json) {
  pcpp::BufferSizes buffers;
  if (const auto known = pcpp::reference_buffers(resolution)) buffers = *known;
  auto bytes = [](double v) { return static_cast<std::int64_t>(std::llround(v * 1e9)); };
  if (gn_gb >= 0) buffers.group_norm = bytes(gn_gb);
  if (conv_gb >= 0) buffers.conv = bytes(conv_gb);
  if (attn_gb >= 0) buffers.attention = bytes(attn_gb);
  if (buffers.total() == 0) {
    throw pcpp::InvalidConfig("no built-in buffers for resolution " + std::to_string(resolution) +
                              "; pass --group-norm-gb, --conv-gb and --attention-gb");
  }
  const auto rows = pcpp::cost_report(resolution, devices, buffers);
  if (json) {
    std::cout << pcpp::to_json_text(rows);
  } else {
    pcpp::write_csv(std::cout, rows);
  }
  const pcpp::RunBytes totals = pcpp::total_run_bytes(devices, buffers);
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.5f", pcpp::reduction_ratio(totals));
  std::cerr << "distrifusion_gb=" << format_gb(totals.distrifusion) << " pcpp_gb=" << format_gb(totals.pcpp)
            << " reduction=" << ratio << '\n';
  return 0;
}

int cmd_trace_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pcpp::InvalidConfig("cannot read trace '" + path + "'");
  const auto events = pcpp::read_trace(in);
  const pcpp::TraceCheck check = pcpp::validate_trace(events);
  std::cout << "events=" << check.events << " sends=" << check.sends << " recvs=" << check.recvs
            << " stale_reads=" << check.stale_reads << " violations=" << check.violations.size() << '\n';
  for (const auto& v : check.violations) std::cout << "violation: " << v << '\n';
  return check.ok() ? 0 : kExitProtocol;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-parallel diffusion communication simulator"};
  app.require_subcommand(1);

  std::string config_path, output, axis, values, trace_path;
  int resolution = 1024, devices = 8;
  double gn_gb = -1, conv_gb = -1, attn_gb = -1;
  bool json = false;

  auto* run = app.add_subcommand("run", "Run the serial oracle and the configured scheme");
  run->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "Artifact directory (overrides output_dir)");

  auto* sw = app.add_subcommand("sweep", "Run one experiment per value of an axis");
  sw->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "partial | devices | warmup | scheme")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--output", output, "Artifact directory (overrides output_dir)");

  auto* costs = app.add_subcommand("costs", "Per-step communication totals of both schemes");
  costs->add_option("--resolution", resolution, "Image side; 1024, 2048 and 3840 have built-in buffers");
  costs->add_option("--devices", devices, "Device count")->check(CLI::PositiveNumber);
  costs->add_option("--group-norm-gb", gn_gb, "Group-norm buffer in GB");
  costs->add_option("--conv-gb", conv_gb, "Conv buffer in GB");
  costs->add_option("--attention-gb", attn_gb, "Attention buffer in GB");
  costs->add_flag("--json", json, "JSON instead of CSV");

  auto* check = app.add_subcommand("trace-check", "Re-validate protocol invariants of a trace file");
  check->add_option("--trace", trace_path, "trace.jsonl")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, output);
    if (*sw) return cmd_sweep(config_path, axis, values, output);
    if (*costs) return cmd_costs(resolution, devices, gn_gb, conv_gb, attn_gb, json);
    if (*check) return cmd_trace_check(trace_path);
  } catch (const pcpp::ProtocolViolation& e) {
    std::cerr << "protocol violation: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const pcpp::DeadlockError& e) {
    std::cerr << "deadlock: " << e.what() << '\n';
    for (const auto& [rank, peers] : e.wait_for) {
      std::cerr << "  rank " << rank << " waits on";
      for (int p : peers) std::cerr << ' ' << p;
      std::cerr << '\n';
    }
    return kExitDeadlock;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
