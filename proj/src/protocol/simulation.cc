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

#include "pcpp/protocol/simulation.h"

#include <algorithm>
#include <string>

#include "pcpp/noise.h"

namespace pcpp {

namespace {

LatentTensor boundary_rows(const LatentTensor& patch) {
  const LatentTensor top = patch.rows(0, 1);
  const LatentTensor bottom = patch.rows(patch.height() - 1, 1);
  const LatentTensor* parts[] = {&top, &bottom};
  return concat_rows(parts);
}

}  // namespace

Simulation::Simulation(const ToyUNet& model, const LatentTensor& x_T, Condition cond,
                       GuidanceConfig guidance, SamplerConfig sampler, Scheme scheme, PatchLayout layout)
    : model_(model), cond_(std::move(cond)), guidance_(guidance), sampler_(sampler), scheme_(scheme),
      layout_(layout), schedule_(build_schedule(std::max(1, sampler.schedule_steps()), sampler.schedule)),
      noise_(sampler.seed), ledger_(scheme.kind, layout.devices(), toy_buffer_sizes(model.shape(), layout)),
      fabric_(layout.devices(), &trace_, &ledger_) {
  guidance_.validate();
  sampler_.validate();
  scheme_.validate();
  if (!scheme_.parallel()) throw InvalidConfig("Simulation needs a parallel scheme");
  if (x_T.height() != layout_.height()) throw ShapeError("Simulation: latent height does not match layout");
  const int n = layout_.devices();
  const auto passes = static_cast<std::size_t>(guidance_.passes());
  const std::vector<LatentTensor> patches = split_patches(x_T, layout_);
  for (int r = 0; r < n; ++r) {
    SimDevice dev;
    dev.rank = r;
    dev.row_begin = layout_.row_begin(r);
    dev.patch = patches[static_cast<std::size_t>(r)];
    dev.slots.assign(passes, std::vector<std::vector<RecvSlot>>(
                                 model_.layer_count(), std::vector<RecvSlot>(static_cast<std::size_t>(n))));
    devices_.push_back(std::move(dev));
  }
}

Phase Simulation::phase_of(int step) const {
  return sampler_.steps - step < scheme_.warmup_steps ? Phase::kWarmup : Phase::kAsync;
}

std::vector<int> Simulation::all_peers(int rank) const {
  std::vector<int> peers;
  for (int r = 0; r < layout_.devices(); ++r) {
    if (r != rank) peers.push_back(r);
  }
  return peers;
}

std::vector<int> Simulation::neighbors(int rank) const {
  std::vector<int> peers;
  if (rank > 0) peers.push_back(rank - 1);
  if (rank + 1 < layout_.devices()) peers.push_back(rank + 1);
  return peers;
}

void Simulation::store(int rank, const CommBatch& batch) {
  SimDevice& dev = devices_[static_cast<std::size_t>(rank)];
  if (batch.kind == LayerKind::kGroupNorm) dev.peer_stats.clear();
  for (const RecvOp& r : batch.recvs) {
    const Message& msg = *r.arrived;
    if (const auto* stats = std::get_if<GroupStats>(msg.payload.get())) {
      dev.peer_stats.push_back(*stats);
      continue;
    }
    RecvSlot& s = dev.slots[static_cast<std::size_t>(msg.key.pass)][static_cast<std::size_t>(msg.key.layer)]
                           [static_cast<std::size_t>(msg.src)];
    s.tensor = std::get<LatentTensor>(*msg.payload);
    s.step = msg.key.step;
  }
}

const RecvSlot& Simulation::slot(int rank, int pass, std::size_t layer, int peer, int expected_step) const {
  const RecvSlot& s = devices_[static_cast<std::size_t>(rank)]
                          .slots[static_cast<std::size_t>(pass)][layer][static_cast<std::size_t>(peer)];
  if (s.step != expected_step) {
    throw ProtocolViolation("rank " + std::to_string(rank) + " layer " + std::to_string(layer) + " needs rank " +
                            std::to_string(peer) + "'s activation from step " + std::to_string(expected_step) +
                            (s.filled() ? ", slot holds step " + std::to_string(s.step) : ", slot is empty"));
  }
  return s;
}

Process Simulation::wait_pending(int rank) {
  while (fabric_.has_pending(rank) && !fabric_.pending_complete(rank)) co_yield Yield::kBlocked;
  if (fabric_.has_pending(rank)) store(rank, fabric_.take(rank));
}

void Simulation::record_compute(int rank, int step, int pass, std::size_t layer, Phase phase,
                                std::vector<ContextRef> context) {
  TraceEvent e;
  e.event = TraceKind::kCompute;
  e.rank = rank;
  e.layer = static_cast<int>(layer);
  e.step = step;
  e.pass = pass;
  e.layer_type = model_.layer(layer).kind;
  e.phase = phase;
  e.context = std::move(context);
  fabric_.record(std::move(e));
}

Process Simulation::run_layer(int rank, int step, int pass, std::size_t layer, LatentTensor& act,
                              const std::vector<double>& emb) {
  const Phase phase = phase_of(step);
  const Layer& spec = model_.layer(layer);
  const BatchKey key{pass, static_cast<int>(layer), step};

  // (1) finish the batch issued at the previous layer
  for (auto sub = wait_pending(rank); sub.resume();) co_yield sub.last();

  std::vector<int> exchange = all_peers(rank);
  if (spec.kind == LayerKind::kAttention && phase == Phase::kAsync && scheme_.kind == SchemeKind::kPcpp) {
    exchange = neighbors(rank);
  }
  const bool synchronous = phase == Phase::kWarmup || spec.kind == LayerKind::kGroupNorm;

  // (2) issue this layer's batch
  if (!exchange.empty()) {
    Payload payload;
    switch (spec.kind) {
      case LayerKind::kGroupNorm:
        payload = compute_group_stats(act, spec.group_norm().groups);
        break;
      case LayerKind::kAttention:
        payload = act;
        break;
      case LayerKind::kConv:
        payload = boundary_rows(act);
        break;
    }
    fabric_.issue(rank, key, spec.kind, phase, std::move(payload), exchange, exchange);
    co_yield Yield::kProgress;
    if (synchronous) {
      for (auto sub = wait_pending(rank); sub.resume();) co_yield sub.last();
    }
  }

  // (3) compute from local input plus buffered neighbor activations
  const int source_step = phase == Phase::kWarmup ? step : step + 1;
  std::vector<ContextRef> context;
  switch (spec.kind) {
    case LayerKind::kGroupNorm: {
      const auto& w = spec.group_norm();
      GroupStats stats = compute_group_stats(act, w.groups);
      if (!exchange.empty()) {
        for (const GroupStats& peer : devices_[static_cast<std::size_t>(rank)].peer_stats) stats.merge(peer);
      }
      act = group_norm(w, act, stats, embedding_shift(w, emb));
      break;
    }
    case LayerKind::kAttention: {
      const auto& w = spec.attention();
      if (scheme_.kind == SchemeKind::kPcpp && phase == Phase::kAsync) {
        const LatentTensor* above = nullptr;
        const LatentTensor* below = nullptr;
        if (rank > 0) above = &slot(rank, pass, layer, rank - 1, source_step).tensor;
        if (rank + 1 < layout_.devices()) below = &slot(rank, pass, layer, rank + 1, source_step).tensor;
        for (int peer : exchange) context.push_back({peer, source_step});
        act = partially_conditioned_attention(act, context_from_neighbors(above, below, scheme_.partial, source_step), w);
      } else {
        std::vector<const LatentTensor*> parts;
        for (int r = 0; r < layout_.devices(); ++r) {
          if (r == rank) {
            parts.push_back(&act);
          } else {
            parts.push_back(&slot(rank, pass, layer, r, source_step).tensor);
            context.push_back({r, source_step});
          }
        }
        act = attention(w, act, concat_rows(parts));
      }
      break;
    }
    case LayerKind::kConv: {
      LatentTensor above, below;
      if (rank > 0) {
        above = slot(rank, pass, layer, rank - 1, source_step).tensor.rows(1, 1);
        context.push_back({rank - 1, source_step});
      }
      if (rank + 1 < layout_.devices()) {
        below = slot(rank, pass, layer, rank + 1, source_step).tensor.rows(0, 1);
        context.push_back({rank + 1, source_step});
      }
      act = conv3x3(spec.conv(), act, rank > 0 ? &above : nullptr, rank + 1 < layout_.devices() ? &below : nullptr);
      break;
    }
  }
  record_compute(rank, step, pass, layer, phase, std::move(context));
  if (observer_) observer_(step, pass, layer, rank, devices_[static_cast<std::size_t>(rank)].row_begin, act);
  co_yield Yield::kProgress;
}

Process Simulation::device_program(int rank) {
  SimDevice& dev = devices_[static_cast<std::size_t>(rank)];
  const int passes = guidance_.passes();
  for (int k = sampler_.steps; k >= 1; --k) {
    const int t = sampler_.timestep(k);
    std::vector<LatentTensor> eps(static_cast<std::size_t>(passes));
    for (int pass = 0; pass < passes; ++pass) {
      const Condition cond = guidance_.enabled && pass == 0 ? Condition{} : cond_;
      const std::vector<double> emb = combined_embedding(t, cond, model_.embedding_dim());
      LatentTensor act = dev.patch;
      for (std::size_t l = 0; l < model_.layer_count(); ++l) {
        for (auto sub = run_layer(rank, k, pass, l, act, emb); sub.resume();) co_yield sub.last();
      }
      eps[static_cast<std::size_t>(pass)] = std::move(act);
    }
    const LatentTensor eps_hat = guidance_.enabled ? cfg_combine(eps[0], eps[1], guidance_) : eps[0];
    dev.patch = reverse_step(dev.patch, eps_hat, t, schedule_, sampler_, noise_, dev.row_begin);
    if (!dev.patch.all_finite()) {
      throw NumericalError("rank " + std::to_string(rank) + ": non-finite latent at step " + std::to_string(k));
    }
    dev.trajectory.push_back(dev.patch);
  }
  for (auto sub = wait_pending(rank); sub.resume();) co_yield sub.last();
}

void Simulation::run(const SchedulePolicy& policy) {
  std::vector<Process> programs;
  for (int r = 0; r < layout_.devices(); ++r) programs.push_back(device_program(r));
  try {
    slices_ = drive(
        programs, policy, [this](int r) { return !fabric_.has_pending(r) || fabric_.pending_complete(r); },
        [this] {
          DeadlockError::WaitForGraph graph;
          for (int r = 0; r < layout_.devices(); ++r) {
            if (fabric_.has_pending(r)) graph.emplace_back(r, fabric_.awaited_peers(r));
          }
          return graph;
        });
  } catch (ProtocolViolation& e) {
    e.trace = trace_;
    throw;
  } catch (DeadlockError& e) {
    e.trace = trace_;
    throw;
  }
  int warmup = 0;
  for (int k = sampler_.steps; k >= 1; --k) warmup += phase_of(k) == Phase::kWarmup ? 1 : 0;
  ledger_.add_passes(Phase::kWarmup, warmup * guidance_.passes());
  ledger_.add_passes(Phase::kAsync, (sampler_.steps - warmup) * guidance_.passes());
}

LatentTensor Simulation::image() const {
  std::vector<LatentTensor> patches;
  for (const auto& d : devices_) patches.push_back(d.patch);
  return reassemble(patches);
}

std::vector<LatentTensor> Simulation::trajectory() const {
  std::vector<LatentTensor> out;
  const std::size_t steps = devices_.front().trajectory.size();
  for (std::size_t i = 0; i < steps; ++i) {
    std::vector<LatentTensor> patches;
    for (const auto& d : devices_) patches.push_back(d.trajectory.at(i));
    out.push_back(reassemble(patches));
  }
  return out;
}

ParallelResult parallel_denoise(const ToyUNet& model, const LatentTensor& x_T, const Condition& cond,
                                const GuidanceConfig& g, const SamplerConfig& cfg, const Scheme& scheme,
                                const PatchLayout& layout, const SchedulePolicy& policy,
                                const DeviceObserver& observer) {
  if (!scheme.parallel()) {
    ActivationObserver serial_observer;
    if (observer) {
      serial_observer = [&observer](int step, int pass, std::size_t l, const LatentTensor& out) {
        observer(step, pass, l, 0, 0, out);
      };
    }
    DenoiseResult r = serial_denoise(model, x_T, cond, g, cfg, serial_observer);
    return {std::move(r.image), CommLedger(SchemeKind::kSerial, 1, {}), {}, std::move(r.trajectory)};
  }
  Simulation sim(model, x_T, cond, g, cfg, scheme, layout);
  sim.set_observer(observer);
  sim.run(policy);
  return {sim.image(), sim.ledger(), sim.trace(), sim.trajectory()};
}

}  // namespace pcpp
