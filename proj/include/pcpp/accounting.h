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

#ifndef PCPP_ACCOUNTING_H_
#define PCPP_ACCOUNTING_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pcpp/patching.h"
#include "pcpp/scheme.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

// Activations are costed at 2 bytes per element (FP16 on the wire) even though
// the simulator computes in double precision.
inline constexpr std::int64_t kWireBytesPerElement = 2;

// Bytes one device contributes per forward pass, by layer type.
struct BufferSizes {
  std::int64_t group_norm = 0;
  std::int64_t conv = 0;
  std::int64_t attention = 0;

  std::int64_t total() const { return group_norm + conv + attention; }
  std::int64_t of(LayerKind kind) const;

  friend bool operator==(const BufferSizes&, const BufferSizes&) = default;
};

// Per-pass buffers of the toy model under a layout: attention sends the whole
// patch, conv sends its top and bottom rows, group norm sends
// (sum, sum of squares, count) per group.
BufferSizes toy_buffer_sizes(const ModelShape& shape, const PatchLayout& layout);

struct ReferenceCosts {
  int resolution;
  BufferSizes buffers;
  double distrifusion_gb;
  double pcpp_gb;
};

// The three reference configurations (1024, 2048, 3840 square) on 8 devices.
const std::vector<ReferenceCosts>& reference_costs();
std::optional<BufferSizes> reference_buffers(int resolution);

// Ring AllGather: b_s * (n - 1) sent per device.
std::int64_t allgather_bytes(std::int64_t buffer_bytes, int devices);
// Point-to-point: one copy of the buffer per neighbor.
std::int64_t p2p_bytes(std::int64_t buffer_bytes, int neighbor_count);

struct RunBytes {
  std::int64_t distrifusion = 0;  // (b_gn + b_conv + b_attn)(n-1)
  std::int64_t pcpp = 0;          // 2 b_attn + (b_gn + b_conv)(n-1)
  // Boundary-aware figure: ranks at the image border have one neighbor.
  std::vector<std::int64_t> pcpp_per_rank;
  std::int64_t pcpp_exact_sum = 0;
};

RunBytes total_run_bytes(int devices, const BufferSizes& buffers);

double reduction_ratio(std::int64_t distrifusion_bytes, std::int64_t pcpp_bytes);
inline double reduction_ratio(const RunBytes& b) { return reduction_ratio(b.distrifusion, b.pcpp); }

struct LedgerEntry {
  std::int64_t messages = 0;
  std::int64_t bytes = 0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

// Message and byte counts of one simulated run, keyed by sending rank, layer
// type and phase. Integer totals only.
class CommLedger {
 public:
  CommLedger() = default;
  CommLedger(SchemeKind scheme, int devices, BufferSizes buffers);

  void record_send(int rank, LayerKind kind, Phase phase, std::int64_t bytes);
  void add_passes(Phase phase, int passes) { passes_[static_cast<int>(phase)] += passes; }

  SchemeKind scheme() const { return scheme_; }
  int devices() const { return devices_; }
  const BufferSizes& buffers() const { return buffers_; }
  // Forward passes executed by each device in the phase.
  int passes(Phase phase) const { return passes_[static_cast<int>(phase)]; }

  LedgerEntry total(LayerKind kind, Phase phase) const;
  LedgerEntry total(Phase phase) const;
  LedgerEntry total() const;
  std::int64_t rank_bytes(int rank, LayerKind kind, Phase phase) const;
  std::int64_t rank_bytes(int rank, Phase phase) const;

  friend bool operator==(const CommLedger&, const CommLedger&) = default;

 private:
  SchemeKind scheme_ = SchemeKind::kSerial;
  int devices_ = 1;
  BufferSizes buffers_;
  std::array<int, 2> passes_{};
  std::map<std::tuple<int, LayerKind, Phase>, LedgerEntry> entries_;
};

struct FlopBreakdown {
  std::int64_t attention = 0;
  std::int64_t conv = 0;
  std::int64_t group_norm = 0;

  std::int64_t total() const { return attention + conv + group_norm; }
};

// Q/K/V/output projections + 2*q*kv*d for scores + 2*q*kv*d for the weighted
// sum, per head.
std::int64_t attention_flops(std::int64_t q_tokens, std::int64_t kv_tokens, int head_dim,
                             int heads, int channels);
// 2 * 9 * C_in * C_out per output pixel.
std::int64_t conv_flops(std::int64_t rows, std::int64_t width, int in_channels, int out_channels);
// Statistics (3 per element) + normalize/affine (4 per element) + embedding
// projection.
std::int64_t group_norm_flops(std::int64_t rows, std::int64_t width, int channels);

// Per-device FLOPs of one denoising step (`passes` forward passes), taken at the
// busiest rank. Serial ignores the layout.
FlopBreakdown modeled_step_cost(const ModelShape& shape, const PatchLayout& layout, double partial,
                                SchemeKind scheme, int passes = 2);

struct ReportRow {
  std::string config;
  std::string scheme;
  std::string layer_type;
  std::int64_t buffer_bytes = 0;
  std::int64_t total_bytes = 0;
  std::optional<double> reduction_ratio;
  std::optional<std::int64_t> per_device_flops;
};

// Report rows for a reference resolution: buffers per layer type and both
// scheme totals.
std::vector<ReportRow> cost_report(int resolution, int devices, const BufferSizes& buffers);

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::string to_json_text(const std::vector<ReportRow>& rows);

}  // namespace pcpp

#endif  // PCPP_ACCOUNTING_H_
