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

#ifndef PCPP_PROTOCOL_SIMULATION_H_
#define PCPP_PROTOCOL_SIMULATION_H_

#include <functional>
#include <optional>
#include <vector>

#include "pcpp/accounting.h"
#include "pcpp/patching.h"
#include "pcpp/protocol/fabric.h"
#include "pcpp/protocol/process.h"
#include "pcpp/protocol/scheduler.h"
#include "pcpp/protocol/trace.h"
#include "pcpp/sampler.h"
#include "pcpp/scheme.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

// Last activation received from one peer for one (pass, layer), tagged with
// the sampling step it was produced at. step < 0 means never filled.
struct RecvSlot {
  LatentTensor tensor;
  int step = -1;

  bool filled() const { return step >= 0; }
};

struct SimDevice {
  int rank = 0;
  std::size_t row_begin = 0;
  LatentTensor patch;
  // slots[pass][layer][peer]
  std::vector<std::vector<std::vector<RecvSlot>>> slots;
  // Group-norm statistics from the most recent synchronous exchange.
  std::vector<GroupStats> peer_stats;
  // Local patch after each denoising iteration.
  std::vector<LatentTensor> trajectory;
};

// Layer output of one device: (sampling step, pass, layer, rank, first global
// row, output rows).
using DeviceObserver = std::function<void(int step, int pass, std::size_t layer, int rank,
                                          std::size_t row_begin, const LatentTensor& output)>;

struct ParallelResult {
  LatentTensor image;
  CommLedger ledger;
  std::vector<TraceEvent> trace;
  std::vector<LatentTensor> trajectory;
};

// Discrete-event run of a parallel scheme: one coroutine per patch device,
// all communication through a shared Fabric.
class Simulation {
 public:
  Simulation(const ToyUNet& model, const LatentTensor& x_T, Condition cond, GuidanceConfig guidance,
             SamplerConfig sampler, Scheme scheme, PatchLayout layout);

  void set_observer(DeviceObserver observer) { observer_ = std::move(observer); }

  // Drives every device program to completion. Protocol and deadlock errors
  // carry the trace recorded so far.
  void run(const SchedulePolicy& policy = SchedulePolicy::lockstep());

  // The program of one device over the whole sampling run.
  Process device_program(int rank);
  // One layer on one device: wait for the previous batch, issue this layer's
  // batch, compute. The result is left in `act`.
  Process run_layer(int rank, int step, int pass, std::size_t layer, LatentTensor& act,
                    const std::vector<double>& emb);

  Phase phase_of(int step) const;
  LatentTensor image() const;
  std::vector<LatentTensor> trajectory() const;
  const SimDevice& device(int rank) const { return devices_.at(static_cast<std::size_t>(rank)); }
  const CommLedger& ledger() const { return ledger_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  const Fabric& fabric() const { return fabric_; }
  const std::vector<int>& slices() const { return slices_; }

 private:
  Process wait_pending(int rank);
  void store(int rank, const CommBatch& batch);
  std::vector<int> all_peers(int rank) const;
  std::vector<int> neighbors(int rank) const;
  const RecvSlot& slot(int rank, int pass, std::size_t layer, int peer, int expected_step) const;
  void record_compute(int rank, int step, int pass, std::size_t layer, Phase phase,
                      std::vector<ContextRef> context);

  const ToyUNet& model_;
  Condition cond_;
  GuidanceConfig guidance_;
  SamplerConfig sampler_;
  Scheme scheme_;
  PatchLayout layout_;
  NoiseSchedule schedule_;
  NoiseStream noise_;
  std::vector<TraceEvent> trace_;
  CommLedger ledger_;
  Fabric fabric_;
  std::vector<SimDevice> devices_;
  DeviceObserver observer_;
  std::vector<int> slices_;
};

// Runs `scheme` over `layout`. The serial scheme is the single-device path
// itself and yields an empty ledger and trace.
ParallelResult parallel_denoise(const ToyUNet& model, const LatentTensor& x_T, const Condition& cond,
                                const GuidanceConfig& g, const SamplerConfig& cfg, const Scheme& scheme,
                                const PatchLayout& layout,
                                const SchedulePolicy& policy = SchedulePolicy::lockstep(),
                                const DeviceObserver& observer = {});

}  // namespace pcpp

#endif  // PCPP_PROTOCOL_SIMULATION_H_
