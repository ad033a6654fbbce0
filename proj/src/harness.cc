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

#include "pcpp/harness.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pcpp/error.h"
#include "pcpp/noise.h"
#include "pcpp/protocol/trace.h"

namespace pcpp {

double psnr(const LatentTensor& a, const LatentTensor& b, double max_value) {
  require_same_shape(a, b, "psnr");
  if (!(max_value > 0.0)) throw InvalidConfig("psnr: max_value must be > 0");
  if (a.empty()) throw ShapeError("psnr: empty tensors");
  double sum = 0.0;
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(max_value) - 10.0 * std::log10(mse);
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

void write_trace_file(const std::string& dir, const std::vector<TraceEvent>& trace) {
  ensure_dir(dir);
  std::ostringstream ss;
  write_trace(ss, trace);
  write_file(std::filesystem::path(dir) / "trace.jsonl", ss.str());
}

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, bool write_artifacts) {
  cfg.validate();
  SamplerConfig sampler = cfg.sampler;
  sampler.seed = cfg.seed;
  const ToyUNet model = ToyUNet::build(cfg.model, cfg.seed);
  const auto h = static_cast<std::size_t>(cfg.model.height);
  const auto w = static_cast<std::size_t>(cfg.model.width);
  const auto c = static_cast<std::size_t>(cfg.model.channels);
  const LatentTensor x_T = initial_latent(cfg.seed, h, w, c);
  const Condition cond = condition_embedding(cfg.prompt_id, model.embedding_dim());
  const Scheme scheme = cfg.make_scheme();
  const PatchLayout layout = cfg.layout();

  ExperimentResult result;
  const DenoiseResult serial = serial_denoise(model, x_T, cond, cfg.guidance, sampler);
  result.serial_image = serial.image;
  if (scheme.parallel()) {
    try {
      result.run = parallel_denoise(model, x_T, cond, cfg.guidance, sampler, scheme, layout, cfg.schedule_policy());
    } catch (ProtocolViolation& e) {
      if (write_artifacts) write_trace_file(cfg.output_dir, e.trace);
      throw;
    } catch (DeadlockError& e) {
      if (write_artifacts) write_trace_file(cfg.output_dir, e.trace);
      throw;
    }
  } else {
    result.run = {serial.image, CommLedger(SchemeKind::kSerial, 1, {}), {}, serial.trajectory};
  }

  QualityReport& r = result.report;
  r.scheme = std::string(scheme_name(scheme.kind));
  r.devices = layout.devices();
  r.partial = scheme.kind == SchemeKind::kPcpp ? scheme.partial : 0.0;
  r.warmup_steps = scheme.parallel() ? scheme.warmup_steps : 0;
  r.seed = cfg.seed;
  r.max_value = max_abs(serial.image);
  if (r.max_value == 0.0) r.max_value = 1.0;
  r.psnr_vs_serial = psnr(result.run.image, serial.image, r.max_value);
  // The seam is measured on the configured device count even for the serial
  // scheme so that serial_seam_score is a like-for-like baseline.
  const PatchLayout seam_layout(h, cfg.devices);
  r.seam_score = seam_discontinuity(result.run.image, seam_layout);
  r.serial_seam_score = seam_discontinuity(serial.image, seam_layout);
  for (std::size_t i = 0; i < serial.trajectory.size(); ++i) {
    r.divergence.push_back(max_abs_diff(result.run.trajectory.at(i), serial.trajectory[i]));
  }
  const CommLedger& ledger = result.run.ledger;
  r.total_bytes = ledger.total().bytes;
  r.warmup_bytes = ledger.total(Phase::kWarmup).bytes;
  r.async_bytes = ledger.total(Phase::kAsync).bytes;
  r.attention_bytes =
      ledger.total(LayerKind::kAttention, Phase::kWarmup).bytes + ledger.total(LayerKind::kAttention, Phase::kAsync).bytes;
  r.step_flops = modeled_step_cost(cfg.model, layout, scheme.partial, scheme.kind, cfg.guidance.passes());
  r.trace_events = result.run.trace.size();
  r.trace_valid = validate_trace(result.run.trace).ok();

  if (write_artifacts) {
    write_trace_file(cfg.output_dir, result.run.trace);
    std::ostringstream ledger_csv;
    write_ledger_csv(ledger_csv, ledger);
    const std::filesystem::path dir(cfg.output_dir);
    write_file(dir / "ledger.csv", ledger_csv.str());
    write_file(dir / "report.json", report_json(r));
    write_file(dir / "config.json", to_config_text(cfg));
  }
  return result;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "partial") return SweepAxis::kPartial;
  if (name == "devices") return SweepAxis::kDevices;
  if (name == "warmup") return SweepAxis::kWarmup;
  if (name == "scheme") return SweepAxis::kScheme;
  throw InvalidConfig("unknown sweep axis '" + name + "'");
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kPartial: return "partial";
    case SweepAxis::kDevices: return "devices";
    case SweepAxis::kWarmup: return "warmup";
    case SweepAxis::kScheme: return "scheme";
  }
  return "partial";
}

std::vector<QualityReport> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values) {
  std::vector<RunConfig> configs;
  for (const std::string& v : values) {
    RunConfig cfg = base;
    try {
      std::size_t used = 0;
      switch (axis) {
        case SweepAxis::kPartial:
          cfg.partial = std::stod(v, &used);
          break;
        case SweepAxis::kDevices:
          cfg.devices = std::stoi(v, &used);
          break;
        case SweepAxis::kWarmup:
          cfg.warmup_steps = std::stoi(v, &used);
          break;
        case SweepAxis::kScheme:
          cfg.scheme = parse_scheme(v);
          used = v.size();
          break;
      }
      if (used != v.size()) throw InvalidConfig("bad value");
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad " + std::string(axis_name(axis)) + " value '" + v + "'");
    } catch (const InvalidConfig&) {
      throw InvalidConfig("bad " + std::string(axis_name(axis)) + " value '" + v + "'");
    }
    cfg.validate();
    configs.push_back(std::move(cfg));
  }
  std::vector<QualityReport> reports;
  for (const RunConfig& cfg : configs) reports.push_back(run_experiment(cfg).report);
  return reports;
}

std::string report_json(const QualityReport& r) {
  nlohmann::json doc;
  doc["scheme"] = r.scheme;
  doc["devices"] = r.devices;
  doc["partial"] = r.partial;
  doc["warmup_steps"] = r.warmup_steps;
  doc["seed"] = r.seed;
  doc["max_value"] = r.max_value;
  doc["psnr_vs_serial"] = number_or_inf(r.psnr_vs_serial);
  doc["seam_score"] = r.seam_score;
  doc["serial_seam_score"] = r.serial_seam_score;
  doc["divergence"] = r.divergence;
  doc["bytes"] = {{"total", r.total_bytes},
                  {"warmup", r.warmup_bytes},
                  {"async", r.async_bytes},
                  {"attention", r.attention_bytes}};
  doc["step_flops"] = {{"attention", r.step_flops.attention},
                       {"conv", r.step_flops.conv},
                       {"group_norm", r.step_flops.group_norm},
                       {"total", r.step_flops.total()}};
  doc["trace_events"] = r.trace_events;
  doc["trace_valid"] = r.trace_valid;
  return doc.dump(2) + "\n";
}

void write_ledger_csv(std::ostream& out, const CommLedger& ledger) {
  out << "rank,layer_type,phase,bytes\n";
  for (int rank = 0; rank < ledger.devices(); ++rank) {
    for (LayerKind kind : {LayerKind::kGroupNorm, LayerKind::kAttention, LayerKind::kConv}) {
      for (Phase phase : {Phase::kWarmup, Phase::kAsync}) {
        out << rank << ',' << layer_kind_name(kind) << ',' << phase_name(phase) << ','
            << ledger.rank_bytes(rank, kind, phase) << '\n';
      }
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<QualityReport>& reports) {
  out << "scheme,devices,partial,warmup_steps,seed,psnr_vs_serial,seam_score,serial_seam_score,total_bytes,"
         "attention_bytes,step_flops,attention_flops\n";
  for (const QualityReport& r : reports) {
    out << r.scheme << ',' << r.devices << ',' << shortest(r.partial) << ',' << r.warmup_steps << ',' << r.seed
        << ',' << shortest(r.psnr_vs_serial) << ',' << shortest(r.seam_score) << ','
        << shortest(r.serial_seam_score) << ',' << r.total_bytes << ',' << r.attention_bytes << ','
        << r.step_flops.total() << ',' << r.step_flops.attention << '\n';
  }
}

}  // namespace pcpp
