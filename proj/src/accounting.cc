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

#include "pcpp/accounting.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pcpp/error.h"

namespace pcpp {

std::int64_t BufferSizes::of(LayerKind kind) const {
  switch (kind) {
    case LayerKind::kGroupNorm: return group_norm;
    case LayerKind::kConv: return conv;
    case LayerKind::kAttention: return attention;
  }
  return 0;
}

BufferSizes toy_buffer_sizes(const ModelShape& shape, const PatchLayout& layout) {
  const auto h = static_cast<std::int64_t>(layout.patch_height());
  const std::int64_t w = shape.width;
  const std::int64_t c = shape.channels;
  BufferSizes b;
  b.group_norm = shape.blocks * static_cast<std::int64_t>(shape.groups) * 3 * kWireBytesPerElement;
  b.conv = shape.blocks * 2 * w * c * kWireBytesPerElement;
  b.attention = shape.blocks * h * w * c * kWireBytesPerElement;
  return b;
}

namespace {
std::int64_t gb(double v) { return std::llround(v * 1e9); }
}  // namespace

const std::vector<ReferenceCosts>& reference_costs() {
  static const std::vector<ReferenceCosts> kTable = {
      {1024, {gb(6e-6), gb(0.008), gb(0.21)}, 1.526, 0.476},
      {2048, {gb(6e-6), gb(0.016), gb(0.839)}, 5.985, 1.79},
      {3840, {gb(6e-6), gb(0.031), gb(2.949)}, 20.86, 6.115},
  };
  return kTable;
}

std::optional<BufferSizes> reference_buffers(int resolution) {
  for (const auto& col : reference_costs()) {
    if (col.resolution == resolution) return col.buffers;
  }
  return std::nullopt;
}

std::int64_t allgather_bytes(std::int64_t buffer_bytes, int devices) {
  if (devices < 2) throw InvalidConfig("AllGather needs at least 2 devices");
  return buffer_bytes * (devices - 1);
}

std::int64_t p2p_bytes(std::int64_t buffer_bytes, int neighbor_count) {
  if (neighbor_count < 1 || neighbor_count > 2) {
    throw InvalidConfig("a patch has 1 or 2 neighbors, got " + std::to_string(neighbor_count));
  }
  return buffer_bytes * neighbor_count;
}

RunBytes total_run_bytes(int devices, const BufferSizes& b) {
  if (devices < 1) throw InvalidConfig("device count must be >= 1");
  RunBytes out;
  out.pcpp_per_rank.assign(static_cast<std::size_t>(devices), 0);
  if (devices == 1) return out;
  const std::int64_t collective = allgather_bytes(b.group_norm, devices) + allgather_bytes(b.conv, devices);
  out.distrifusion = collective + allgather_bytes(b.attention, devices);
  out.pcpp = collective + p2p_bytes(b.attention, 2);
  const PatchLayout layout(static_cast<std::size_t>(devices), devices);
  for (int r = 0; r < devices; ++r) {
    out.pcpp_per_rank[r] = collective + p2p_bytes(b.attention, layout.neighbor_count(r));
    out.pcpp_exact_sum += out.pcpp_per_rank[r];
  }
  return out;
}

double reduction_ratio(std::int64_t distrifusion_bytes, std::int64_t pcpp_bytes) {
  if (distrifusion_bytes <= 0) throw InvalidConfig("reduction ratio needs a positive baseline");
  return 1.0 - static_cast<double>(pcpp_bytes) / static_cast<double>(distrifusion_bytes);
}

CommLedger::CommLedger(SchemeKind scheme, int devices, BufferSizes buffers)
    : scheme_(scheme), devices_(devices), buffers_(buffers) {}

void CommLedger::record_send(int rank, LayerKind kind, Phase phase, std::int64_t bytes) {
  auto& e = entries_[{rank, kind, phase}];
  ++e.messages;
  e.bytes += bytes;
}

LedgerEntry CommLedger::total(LayerKind kind, Phase phase) const {
  LedgerEntry out;
  for (const auto& [key, e] : entries_) {
    if (std::get<1>(key) == kind && std::get<2>(key) == phase) {
      out.messages += e.messages;
      out.bytes += e.bytes;
    }
  }
  return out;
}

LedgerEntry CommLedger::total(Phase phase) const {
  LedgerEntry out;
  for (const auto& [key, e] : entries_) {
    if (std::get<2>(key) == phase) {
      out.messages += e.messages;
      out.bytes += e.bytes;
    }
  }
  return out;
}

LedgerEntry CommLedger::total() const {
  LedgerEntry a = total(Phase::kWarmup), b = total(Phase::kAsync);
  return {a.messages + b.messages, a.bytes + b.bytes};
}

std::int64_t CommLedger::rank_bytes(int rank, LayerKind kind, Phase phase) const {
  auto it = entries_.find({rank, kind, phase});
  return it == entries_.end() ? 0 : it->second.bytes;
}

std::int64_t CommLedger::rank_bytes(int rank, Phase phase) const {
  return rank_bytes(rank, LayerKind::kGroupNorm, phase) + rank_bytes(rank, LayerKind::kConv, phase) +
         rank_bytes(rank, LayerKind::kAttention, phase);
}

std::int64_t attention_flops(std::int64_t q_tokens, std::int64_t kv_tokens, int head_dim, int heads,
                             int channels) {
  const std::int64_t inner = static_cast<std::int64_t>(heads) * head_dim;
  const std::int64_t projections = 2 * q_tokens * channels * inner        // Q
                                   + 2 * 2 * kv_tokens * channels * inner  // K, V
                                   + 2 * q_tokens * inner * channels;      // output
  const std::int64_t core = heads * (2 * q_tokens * kv_tokens * head_dim + 2 * q_tokens * kv_tokens * head_dim);
  return projections + core;
}

std::int64_t conv_flops(std::int64_t rows, std::int64_t width, int in_channels, int out_channels) {
  return 2 * 9 * static_cast<std::int64_t>(in_channels) * out_channels * rows * width;
}

std::int64_t group_norm_flops(std::int64_t rows, std::int64_t width, int channels) {
  return 7 * rows * width * channels + 2 * 2 * static_cast<std::int64_t>(channels) * channels;
}

FlopBreakdown modeled_step_cost(const ModelShape& shape, const PatchLayout& layout, double partial,
                                SchemeKind scheme, int passes) {
  const std::int64_t w = shape.width;
  const auto full_rows = static_cast<std::int64_t>(shape.height);
  std::int64_t q_rows = full_rows, kv_rows = full_rows;
  if (scheme != SchemeKind::kSerial) {
    q_rows = static_cast<std::int64_t>(layout.patch_height());
    if (scheme == SchemeKind::kPcpp) {
      const auto ctx = static_cast<std::int64_t>(context_rows(partial, layout.patch_height()));
      std::int64_t busiest = 0;
      for (int r = 0; r < layout.devices(); ++r) {
        busiest = std::max(busiest, q_rows + ctx * layout.neighbor_count(r));
      }
      kv_rows = busiest;
    }
  }
  FlopBreakdown per_pass;
  for (int b = 0; b < shape.blocks; ++b) {
    per_pass.group_norm += group_norm_flops(q_rows, w, shape.channels);
    per_pass.attention += attention_flops(q_rows * w, kv_rows * w, shape.head_dim, shape.heads, shape.channels);
    per_pass.conv += conv_flops(q_rows, w, shape.channels, shape.channels);
  }
  return {per_pass.attention * passes, per_pass.conv * passes, per_pass.group_norm * passes};
}

std::vector<ReportRow> cost_report(int resolution, int devices, const BufferSizes& buffers) {
  const std::string config = std::to_string(resolution) + "x" + std::to_string(resolution) + "@" +
                             std::to_string(devices);
  const RunBytes totals = total_run_bytes(devices, buffers);
  const double ratio = reduction_ratio(totals);
  std::vector<ReportRow> rows;
  for (LayerKind kind : {LayerKind::kGroupNorm, LayerKind::kConv, LayerKind::kAttention}) {
    const std::int64_t b = buffers.of(kind);
    const std::string name(layer_kind_name(kind));
    rows.push_back({config, "distrifusion", name, b, allgather_bytes(b, devices), std::nullopt, std::nullopt});
    const std::int64_t pcpp_total =
        kind == LayerKind::kAttention ? p2p_bytes(b, 2) : allgather_bytes(b, devices);
    rows.push_back({config, "pcpp", name, b, pcpp_total, std::nullopt, std::nullopt});
  }
  rows.push_back({config, "distrifusion", "all", buffers.total(), totals.distrifusion, std::nullopt, std::nullopt});
  rows.push_back({config, "pcpp", "all", buffers.total(), totals.pcpp, ratio, std::nullopt});
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "config,scheme,layer_type,buffer_bytes,total_bytes,reduction_ratio,per_device_flops\n";
  for (const auto& r : rows) {
    out << r.config << ',' << r.scheme << ',' << r.layer_type << ',' << r.buffer_bytes << ','
        << r.total_bytes << ',';
    if (r.reduction_ratio) {
      std::ostringstream ratio;
      ratio.precision(6);
      ratio << std::fixed << *r.reduction_ratio;
      out << ratio.str();
    }
    out << ',';
    if (r.per_device_flops) out << *r.per_device_flops;
    out << '\n';
  }
}

std::string to_json_text(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"config", r.config},           {"scheme", r.scheme},
                        {"layer_type", r.layer_type},   {"buffer_bytes", r.buffer_bytes},
                        {"total_bytes", r.total_bytes}, {"reduction_ratio", nullptr},
                        {"per_device_flops", nullptr}};
    if (r.reduction_ratio) j["reduction_ratio"] = *r.reduction_ratio;
    if (r.per_device_flops) j["per_device_flops"] = *r.per_device_flops;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace pcpp
