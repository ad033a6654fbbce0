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

#include "pcpp/protocol/fabric.h"

#include <algorithm>
#include <string>

namespace pcpp {

bool CommBatch::complete() const {
  return std::all_of(sends.begin(), sends.end(), [](const SendOp& s) { return s.delivered; }) &&
         std::all_of(recvs.begin(), recvs.end(), [](const RecvOp& r) { return r.arrived.has_value(); });
}

std::int64_t payload_wire_bytes(const Payload& p) {
  if (const auto* t = std::get_if<LatentTensor>(&p)) {
    return static_cast<std::int64_t>(t->size()) * kWireBytesPerElement;
  }
  // sum, sum of squares and count per group
  return static_cast<std::int64_t>(std::get<GroupStats>(p).count.size()) * 3 * kWireBytesPerElement;
}

Fabric::Fabric(int devices, std::vector<TraceEvent>* trace, CommLedger* ledger)
    : devices_(devices), trace_(trace), ledger_(ledger),
      channels_(static_cast<std::size_t>(devices) * static_cast<std::size_t>(devices)),
      pending_(static_cast<std::size_t>(devices)) {}

void Fabric::record(TraceEvent e) {
  e.tick = next_tick();
  if (trace_) trace_->push_back(std::move(e));
}

void Fabric::issue(int rank, BatchKey key, LayerKind kind, Phase phase, Payload payload,
                   const std::vector<int>& send_to, const std::vector<int>& recv_from) {
  if (pending_[rank]) {
    throw ProtocolViolation("rank " + std::to_string(rank) + " issued batch (layer " + std::to_string(key.layer) +
                            ", step " + std::to_string(key.step) + ") while batch (layer " +
                            std::to_string(pending_[rank]->key.layer) + ") is in flight");
  }
  CommBatch batch;
  batch.owner = rank;
  batch.key = key;
  batch.kind = kind;
  batch.phase = phase;
  batch.serial = ++next_serial_;
  auto shared = std::make_shared<const Payload>(std::move(payload));
  const std::int64_t bytes = payload_wire_bytes(*shared);
  for (std::size_t i = 0; i < send_to.size(); ++i) {
    const int dst = send_to[i];
    batch.sends.push_back({dst, false});
    channels_[index(rank, dst)].push_back({rank, dst, key, shared, batch.serial, i});
    TraceEvent e;
    e.event = TraceKind::kSend;
    e.rank = rank;
    e.layer = key.layer;
    e.step = key.step;
    e.pass = key.pass;
    e.peer = dst;
    e.bytes = bytes;
    e.layer_type = kind;
    e.phase = phase;
    record(std::move(e));
    if (ledger_) ledger_->record_send(rank, kind, phase, bytes);
  }
  for (int src : recv_from) batch.recvs.push_back({src, std::nullopt});
  pending_[rank] = std::move(batch);
  for (int dst : send_to) match(rank, dst);
  for (int src : recv_from) match(src, rank);
}

void Fabric::match(int src, int dst) {
  auto& channel = channels_[index(src, dst)];
  while (!channel.empty() && pending_[dst]) {
    CommBatch& receiver = *pending_[dst];
    auto slot = std::find_if(receiver.recvs.begin(), receiver.recvs.end(),
                             [src](const RecvOp& r) { return r.src == src && !r.arrived; });
    if (slot == receiver.recvs.end()) return;
    Message msg = std::move(channel.front());
    channel.pop_front();

    TraceEvent e;
    e.event = TraceKind::kRecv;
    e.rank = dst;
    e.peer = src;
    e.layer = msg.key.layer;
    e.step = msg.key.step;
    e.pass = msg.key.pass;
    e.bytes = payload_wire_bytes(*msg.payload);
    e.layer_type = receiver.kind;
    e.phase = receiver.phase;
    e.expect_layer = receiver.key.layer;
    e.expect_step = receiver.key.step;
    e.expect_pass = receiver.key.pass;
    record(std::move(e));
    if (msg.key != receiver.key) {
      throw ProtocolViolation("rank " + std::to_string(dst) + " bound a layer " + std::to_string(msg.key.layer) +
                              " message from rank " + std::to_string(src) + " to a layer " +
                              std::to_string(receiver.key.layer) + " receive");
    }
    if (!pending_[src] || pending_[src]->serial != msg.batch_serial) {
      throw ProtocolViolation("message from rank " + std::to_string(src) + " outlived its batch");
    }
    pending_[src]->sends[msg.send_index].delivered = true;
    slot->arrived = std::move(msg);
  }
}

CommBatch Fabric::take(int rank) {
  if (!pending_[rank] || !pending_[rank]->complete()) {
    throw ProtocolViolation("rank " + std::to_string(rank) + " took an incomplete batch");
  }
  CommBatch batch = std::move(*pending_[rank]);
  pending_[rank].reset();
  TraceEvent e;
  e.event = TraceKind::kWait;
  e.rank = rank;
  e.layer = batch.key.layer;
  e.step = batch.key.step;
  e.pass = batch.key.pass;
  e.layer_type = batch.kind;
  e.phase = batch.phase;
  record(std::move(e));
  return batch;
}

std::vector<int> Fabric::awaited_peers(int rank) const {
  std::vector<int> peers;
  if (!pending_[rank]) return peers;
  for (const auto& s : pending_[rank]->sends) {
    if (!s.delivered) peers.push_back(s.dst);
  }
  for (const auto& r : pending_[rank]->recvs) {
    if (!r.arrived) peers.push_back(r.src);
  }
  std::sort(peers.begin(), peers.end());
  peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
  return peers;
}

}  // namespace pcpp
