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

#ifndef PCPP_PROTOCOL_TRACE_H_
#define PCPP_PROTOCOL_TRACE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcpp/scheme.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

enum class TraceKind { kSend, kRecv, kWait, kCompute };

// A neighbor activation read by a compute event, with the step it was produced at.
struct ContextRef {
  int peer = -1;
  int step = 0;

  friend bool operator==(const ContextRef&, const ContextRef&) = default;
};

// One line of the event trace. The first seven fields are the portable
// record; the rest carry what the offline checker needs.
struct TraceEvent {
  TraceKind event = TraceKind::kCompute;
  int rank = 0;
  int layer = 0;
  int step = 0;
  int peer = -1;
  std::int64_t bytes = 0;
  std::uint64_t tick = 0;

  int pass = 0;
  std::optional<LayerKind> layer_type;
  Phase phase = Phase::kAsync;
  // recv: the expectation this message was bound to (layer, step, pass).
  int expect_layer = -1;
  int expect_step = -1;
  int expect_pass = -1;
  // compute: stale or fresh neighbor activations consumed.
  std::vector<ContextRef> context;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

std::string_view trace_kind_name(TraceKind kind);

std::string to_json_line(const TraceEvent& e);
TraceEvent parse_trace_line(const std::string& line);

void write_trace(std::ostream& out, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(std::istream& in);

struct TraceCheck {
  std::vector<std::string> violations;
  std::size_t events = 0;
  std::size_t sends = 0;
  std::size_t recvs = 0;
  std::size_t stale_reads = 0;

  bool ok() const { return violations.empty(); }
};

// Re-derives the protocol invariants from a trace: at most one in-flight batch
// per ordered device pair, FIFO binding of every receive to its expectation,
// per-pair receive order equal to send order, and the freshness contract
// (async reads come from step t+1, warm-up reads from step t).
TraceCheck validate_trace(const std::vector<TraceEvent>& events);

}  // namespace pcpp

#endif  // PCPP_PROTOCOL_TRACE_H_
