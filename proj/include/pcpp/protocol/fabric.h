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

#ifndef PCPP_PROTOCOL_FABRIC_H_
#define PCPP_PROTOCOL_FABRIC_H_

#include <compare>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "pcpp/accounting.h"
#include "pcpp/error.h"
#include "pcpp/protocol/trace.h"
#include "pcpp/tensor.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

// Fail-fast protocol breach: misbound message, missing or stale buffer slot,
// second in-flight batch. `trace` holds the events up to the failure when the
// error escapes a full run.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
  std::vector<TraceEvent> trace;
};

// No device can make progress while batches remain incomplete.
class DeadlockError : public Error {
 public:
  // rank -> peers it is waiting on
  using WaitForGraph = std::vector<std::pair<int, std::vector<int>>>;
  DeadlockError(const std::string& what, WaitForGraph graph) : Error(what), wait_for(std::move(graph)) {}
  WaitForGraph wait_for;
  std::vector<TraceEvent> trace;
};

// Identifies one layer activation exchange: (pass, layer, step).
struct BatchKey {
  int pass = 0;
  int layer = 0;
  int step = 0;

  friend auto operator<=>(const BatchKey&, const BatchKey&) = default;
};

using Payload = std::variant<LatentTensor, GroupStats>;

struct Message {
  int src = 0;
  int dst = 0;
  BatchKey key;
  std::shared_ptr<const Payload> payload;
  std::uint64_t batch_serial = 0;
  std::size_t send_index = 0;
};

struct SendOp {
  int dst = 0;
  bool delivered = false;
};

struct RecvOp {
  int src = 0;
  std::optional<Message> arrived;
};

// One batched group of sends and receives, issued in a single call and
// completed as a unit. Receives carry no tag: the k-th message on a channel
// binds to the k-th open expectation from that source.
struct CommBatch {
  int owner = 0;
  BatchKey key;
  LayerKind kind = LayerKind::kAttention;
  Phase phase = Phase::kAsync;
  std::uint64_t serial = 0;
  std::vector<SendOp> sends;
  std::vector<RecvOp> recvs;

  bool complete() const;
};

// FIFO channels between every ordered device pair plus each device's (at most
// one) pending batch. Sends are rendezvous: a send op completes only when the
// destination's posted receive consumes it.
class Fabric {
 public:
  Fabric(int devices, std::vector<TraceEvent>* trace, CommLedger* ledger);

  int devices() const { return devices_; }

  // Posts a batch sending `payload` to each of `send_to` and expecting one
  // message with the same key from each of `recv_from`. Throws
  // ProtocolViolation if `rank` already has a batch in flight.
  void issue(int rank, BatchKey key, LayerKind kind, Phase phase, Payload payload,
             const std::vector<int>& send_to, const std::vector<int>& recv_from);

  bool has_pending(int rank) const { return pending_[rank].has_value(); }
  const CommBatch* pending(int rank) const { return pending_[rank] ? &*pending_[rank] : nullptr; }
  bool pending_complete(int rank) const { return pending_[rank] && pending_[rank]->complete(); }
  // Removes a completed batch and records the wait event.
  CommBatch take(int rank);

  std::size_t queued(int src, int dst) const { return channels_[index(src, dst)].size(); }
  // Peers whose matching operation `rank`'s pending batch still lacks.
  std::vector<int> awaited_peers(int rank) const;

  std::uint64_t next_tick() { return ++tick_; }
  void record(TraceEvent e);

 private:
  std::size_t index(int src, int dst) const {
    return static_cast<std::size_t>(src) * static_cast<std::size_t>(devices_) + static_cast<std::size_t>(dst);
  }
  void match(int src, int dst);

  int devices_;
  std::vector<TraceEvent>* trace_;
  CommLedger* ledger_;
  std::vector<std::deque<Message>> channels_;
  std::vector<std::optional<CommBatch>> pending_;
  std::uint64_t tick_ = 0;
  std::uint64_t next_serial_ = 0;
};

std::int64_t payload_wire_bytes(const Payload& p);

}  // namespace pcpp

#endif  // PCPP_PROTOCOL_FABRIC_H_
