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

#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "pcpp/noise.h"
#include "pcpp/protocol/fabric.h"
#include "pcpp/protocol/scheduler.h"
#include "pcpp/protocol/simulation.h"
#include "pcpp/protocol/trace.h"
#include "test_util.h"

namespace pcpp {
namespace {

using testing::random_latent;

struct Bench {
  ToyUNet model = ToyUNet::build(ModelShape{}, 4);
  LatentTensor x = initial_latent(4, 16, 16, 8);
  Condition cond = condition_embedding(2, 16);
  GuidanceConfig guidance;
  SamplerConfig sampler;

  explicit Bench(int steps) {
    sampler.steps = steps;
    sampler.seed = 4;
  }
  ParallelResult run(Scheme scheme, int n, const SchedulePolicy& policy = SchedulePolicy::lockstep(),
                     const DeviceObserver& obs = {}) const {
    return parallel_denoise(model, x, cond, guidance, sampler, scheme, PatchLayout(16, n), policy, obs);
  }
};

std::vector<const TraceEvent*> select(const std::vector<TraceEvent>& trace, TraceKind kind, int rank, int step,
                                      int pass, int layer) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : trace) {
    if (e.event == kind && e.rank == rank && e.step == step && e.pass == pass && e.layer == layer) out.push_back(&e);
  }
  return out;
}

TEST(Fabric, SecondBatchWhileInFlightIsViolation) {
  std::vector<TraceEvent> trace;
  Fabric f(2, &trace, nullptr);
  f.issue(0, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1), {1}, {1});
  EXPECT_TRUE(f.has_pending(0));
  EXPECT_FALSE(f.pending_complete(0));
  EXPECT_THROW(f.issue(0, {0, 2, 5}, LayerKind::kConv, Phase::kAsync, LatentTensor(1, 1, 1), {1}, {1}),
               ProtocolViolation);
}

TEST(Fabric, BatchCompletesOnlyWhenSendsConsumedAndRecvsBound) {
  std::vector<TraceEvent> trace;
  Fabric f(2, &trace, nullptr);
  f.issue(0, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1, 1.0), {1}, {1});
  EXPECT_EQ(f.queued(0, 1), 1u);
  EXPECT_EQ(f.awaited_peers(0), std::vector<int>{1});
  f.issue(1, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1, 2.0), {0}, {0});
  ASSERT_TRUE(f.pending_complete(0));
  ASSERT_TRUE(f.pending_complete(1));
  const CommBatch b = f.take(0);
  EXPECT_EQ(std::get<LatentTensor>(*b.recvs[0].arrived->payload).at(0, 0, 0), 2.0);
  EXPECT_THROW(f.take(0), ProtocolViolation);
  EXPECT_EQ(trace.back().event, TraceKind::kWait);
}

TEST(Fabric, MisboundMessageIsDetected) {
  std::vector<TraceEvent> trace;
  Fabric f(2, &trace, nullptr);
  f.issue(0, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1), {1}, {});
  // rank 1 skipped layer 1 and expects layer 2: FIFO binding hands it layer 1
  EXPECT_THROW(f.issue(1, {0, 2, 5}, LayerKind::kConv, Phase::kAsync, LatentTensor(1, 1, 1), {}, {0}),
               ProtocolViolation);
  EXPECT_FALSE(validate_trace(trace).ok());
}

TEST(Fabric, MessagesWaitForTheMatchingBatch) {
  std::vector<TraceEvent> trace;
  Fabric f(2, &trace, nullptr);
  f.issue(0, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1), {1}, {1});
  f.issue(1, {0, 1, 5}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1), {0}, {0});
  f.take(1);
  // rank 1 moves ahead; rank 0 has not collected its batch yet
  f.issue(1, {0, 2, 5}, LayerKind::kConv, Phase::kAsync, LatentTensor(1, 1, 1), {0}, {0});
  EXPECT_EQ(f.queued(1, 0), 1u);
  f.take(0);
  f.issue(0, {0, 2, 5}, LayerKind::kConv, Phase::kAsync, LatentTensor(1, 1, 1), {1}, {1});
  EXPECT_TRUE(f.pending_complete(0));
  EXPECT_TRUE(f.pending_complete(1));
  EXPECT_TRUE(validate_trace(trace).ok());
}

Process one_batch(Fabric& f, int rank, std::vector<int> peers) {
  f.issue(rank, {0, 0, 1}, LayerKind::kAttention, Phase::kAsync, LatentTensor(1, 1, 1), peers, peers);
  co_yield Yield::kProgress;
  while (!f.pending_complete(rank)) co_yield Yield::kBlocked;
  f.take(rank);
}

Process idle() { co_return; }

TEST(Scheduler, DetectsDeadlockAndReportsWaitForGraph) {
  std::vector<TraceEvent> trace;
  Fabric f(3, &trace, nullptr);
  std::vector<Process> programs;
  programs.push_back(one_batch(f, 0, {1}));
  programs.push_back(one_batch(f, 1, {0, 2}));
  programs.push_back(idle());
  try {
    drive(
        programs, SchedulePolicy::lockstep(), [&](int r) { return f.pending_complete(r); },
        [&] {
          DeadlockError::WaitForGraph g;
          for (int r = 0; r < 3; ++r) {
            if (f.has_pending(r)) g.emplace_back(r, f.awaited_peers(r));
          }
          return g;
        });
    FAIL() << "expected deadlock";
  } catch (const DeadlockError& e) {
    ASSERT_EQ(e.wait_for.size(), 1u);
    EXPECT_EQ(e.wait_for[0].first, 1);
    EXPECT_EQ(e.wait_for[0].second, std::vector<int>{2});
  }
}

TEST(Scheduler, PolicyParsing) {
  EXPECT_EQ(parse_policy("lockstep", 4).kind, SchedulePolicy::Kind::kLockstep);
  EXPECT_EQ(parse_policy("random:17", 4).seed, 17u);
  EXPECT_EQ(parse_policy("adversarial", 3).order, (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(parse_policy("priority:1,0,2", 3).order, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(policy_name(parse_policy("priority:1,0,2", 3)), "priority:1,0,2");
  EXPECT_THROW(parse_policy("priority:1,1,2", 3), InvalidConfig);
  EXPECT_THROW(parse_policy("random:x", 3), InvalidConfig);
  EXPECT_THROW(parse_policy("fifo", 3), InvalidConfig);
}

TEST(Scheduler, SingleDeviceTerminates) {
  const Bench s(3);
  const auto r = s.run({SchemeKind::kPcpp, 0.3, 1}, 1, SchedulePolicy::adversarial(1));
  EXPECT_TRUE(r.trace.empty() || std::none_of(r.trace.begin(), r.trace.end(),
                                              [](const TraceEvent& e) { return e.event == TraceKind::kSend; }));
}

TEST(RunLayer, BoundaryRankExchangesWithOneNeighbor) {
  const Bench s(6);
  const auto r = s.run({SchemeKind::kPcpp, 0.3, 2}, 4);
  // step 3 is asynchronous; layer 1 is attention
  const auto sends = select(r.trace, TraceKind::kSend, 0, 3, 0, 1);
  ASSERT_EQ(sends.size(), 1u);
  EXPECT_EQ(sends[0]->peer, 1);
  const auto recvs = select(r.trace, TraceKind::kRecv, 0, 3, 0, 1);
  ASSERT_EQ(recvs.size(), 1u);
  EXPECT_EQ(recvs[0]->peer, 1);
  EXPECT_EQ(select(r.trace, TraceKind::kSend, 1, 3, 0, 1).size(), 2u);
}

TEST(RunLayer, WaitsOnPreviousLayerSendsThenComputesWithStaleNeighbors) {
  const Bench s(12);
  const auto r = s.run({SchemeKind::kPcpp, 0.3, 2}, 4);
  // rank 2, step 9, conv layer 2: wait for the layer-1 batch, send layer 2,
  // compute from step-10 neighbor activations
  const auto waits = select(r.trace, TraceKind::kWait, 2, 9, 0, 1);
  const auto sends = select(r.trace, TraceKind::kSend, 2, 9, 0, 2);
  const auto computes = select(r.trace, TraceKind::kCompute, 2, 9, 0, 2);
  ASSERT_EQ(waits.size(), 1u);
  ASSERT_EQ(sends.size(), 3u);
  ASSERT_EQ(computes.size(), 1u);
  EXPECT_LT(waits[0]->tick, sends[0]->tick);
  EXPECT_LT(sends.back()->tick, computes[0]->tick);
  EXPECT_EQ(computes[0]->context, (std::vector<ContextRef>{{1, 10}, {3, 10}}));
  const auto attn = select(r.trace, TraceKind::kCompute, 2, 9, 0, 1);
  ASSERT_EQ(attn.size(), 1u);
  EXPECT_EQ(attn[0]->context, (std::vector<ContextRef>{{1, 10}, {3, 10}}));
}

TEST(RunLayer, MissingSlotAfterWarmupIsViolation) {
  const Bench s(5);
  Simulation sim(s.model, s.x, s.cond, s.guidance, s.sampler, Scheme{SchemeKind::kPcpp, 0.3, 1}, PatchLayout(16, 2));
  LatentTensor act = s.x.rows(0, 8);
  const auto emb = combined_embedding(3, std::nullopt, 16);
  auto layer = sim.run_layer(0, 3, 0, 1, act, emb);
  EXPECT_THROW(
      {
        while (layer.resume()) {
        }
      },
      ProtocolViolation);
}

TEST(RunLayer, SingleDeviceHasNoCommunication) {
  const Bench s(4);
  const auto r = s.run({SchemeKind::kPcpp, 0.3, 1}, 1);
  EXPECT_EQ(r.ledger.total().bytes, 0);
  for (const auto& e : r.trace) EXPECT_EQ(e.event, TraceKind::kCompute);
}

TEST(Warmup, LayerOutputsMatchSerialAndSeedBuffers) {
  const Bench s(6);
  std::map<std::tuple<int, int, std::size_t>, LatentTensor> serial;
  serial_denoise(s.model, s.x, s.cond, s.guidance, s.sampler,
                 [&](int step, int pass, std::size_t l, const LatentTensor& out) { serial[{step, pass, l}] = out; });
  for (SchemeKind kind : {SchemeKind::kPcpp, SchemeKind::kDistriFusion}) {
    double worst = 0;
    int checked = 0;
    const Scheme scheme{kind, 0.3, 3};
    Simulation sim(s.model, s.x, s.cond, s.guidance, s.sampler, scheme, PatchLayout(16, 4));
    sim.set_observer([&](int step, int pass, std::size_t l, int, std::size_t row_begin, const LatentTensor& out) {
      if (step <= 6 - 3) return;
      worst = std::max(worst, max_abs_diff(out, serial.at({step, pass, l}).rows(row_begin, out.height())));
      ++checked;
    });
    sim.run();
    EXPECT_EQ(checked, 3 * 2 * 6 * 4);
    EXPECT_EQ(worst, 0.0);
    for (int r = 0; r < 4; ++r) {
      for (const auto& pass : sim.device(r).slots) {
        for (std::size_t l = 0; l < pass.size(); ++l) {
          if (s.model.layer(l).kind == LayerKind::kGroupNorm) continue;
          for (int peer = 0; peer < 4; ++peer) {
            if (peer == r) continue;
            EXPECT_TRUE(pass[l][static_cast<std::size_t>(peer)].filled());
          }
        }
      }
    }
  }
}

TEST(Warmup, AllStepsSynchronousEqualsSerial) {
  const Bench s(5);
  const auto serial = serial_denoise(s.model, s.x, s.cond, s.guidance, s.sampler);
  for (int n : {2, 4, 8}) {
    for (SchemeKind kind : {SchemeKind::kPcpp, SchemeKind::kDistriFusion}) {
      EXPECT_EQ(s.run({kind, 0.0, 5}, n).image, serial.image);
    }
  }
}

TEST(Interleaving, ImagesIdenticalAcrossPolicies) {
  const Bench s(5);
  for (int n : {2, 4}) {
    const Scheme scheme{SchemeKind::kPcpp, 0.3, 1};
    const auto base = s.run(scheme, n);
    const auto adversarial = s.run(scheme, n, SchedulePolicy::adversarial(n));
    EXPECT_EQ(adversarial.image, base.image);
    EXPECT_TRUE(validate_trace(adversarial.trace).ok());
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = s.run(scheme, n, SchedulePolicy::random(seed));
      EXPECT_EQ(r.image, base.image);
      EXPECT_EQ(r.ledger, base.ledger);
      EXPECT_TRUE(validate_trace(r.trace).ok());
    }
  }
}

TEST(Interleaving, RandomPoliciesActuallyDiffer) {
  const Bench s(3);
  Simulation a(s.model, s.x, s.cond, s.guidance, s.sampler, Scheme{SchemeKind::kPcpp, 0.3, 1}, PatchLayout(16, 4));
  Simulation b(s.model, s.x, s.cond, s.guidance, s.sampler, Scheme{SchemeKind::kPcpp, 0.3, 1}, PatchLayout(16, 4));
  a.run(SchedulePolicy::random(1));
  b.run(SchedulePolicy::random(2));
  EXPECT_NE(a.slices(), b.slices());
  EXPECT_EQ(a.image(), b.image());
}

TEST(Trace, JsonLineRoundTrip) {
  const Bench s(3);
  const auto r = s.run({SchemeKind::kDistriFusion, 0.3, 1}, 2);
  std::stringstream ss;
  write_trace(ss, r.trace);
  EXPECT_EQ(read_trace(ss), r.trace);
  EXPECT_THROW(parse_trace_line("{\"event\":\"jump\"}"), InvalidConfig);
  EXPECT_THROW(parse_trace_line("not json"), InvalidConfig);
}

TEST(Trace, PortableFieldsPresent) {
  TraceEvent e;
  e.event = TraceKind::kSend;
  const std::string line = to_json_line(e);
  for (const char* key : {"\"event\"", "\"rank\"", "\"layer\"", "\"step\"", "\"peer\"", "\"bytes\"", "\"tick\""}) {
    EXPECT_NE(line.find(key), std::string::npos) << key;
  }
}

TEST(Trace, CheckerFlagsTamperedTraces) {
  const Bench s(4);
  const auto r = s.run({SchemeKind::kPcpp, 0.3, 1}, 4);
  ASSERT_TRUE(validate_trace(r.trace).ok());
  EXPECT_GT(validate_trace(r.trace).stale_reads, 0u);

  auto stale = r.trace;
  for (auto& e : stale) {
    if (e.event == TraceKind::kCompute && e.phase == Phase::kAsync && !e.context.empty()) {
      e.context[0].step += 1;
      break;
    }
  }
  EXPECT_FALSE(validate_trace(stale).ok());

  auto misbound = r.trace;
  for (auto& e : misbound) {
    if (e.event == TraceKind::kRecv) {
      e.expect_layer += 1;
      break;
    }
  }
  EXPECT_FALSE(validate_trace(misbound).ok());

  auto no_wait = r.trace;
  no_wait.erase(std::find_if(no_wait.begin(), no_wait.end(), [](const TraceEvent& e) {
    return e.event == TraceKind::kWait && e.phase == Phase::kAsync;
  }));
  EXPECT_FALSE(validate_trace(no_wait).ok());

  auto reordered = r.trace;
  std::swap(reordered[3].tick, reordered[4].tick);
  EXPECT_FALSE(validate_trace(reordered).ok());
}

TEST(Ledger, MatchesTraceSendBytes) {
  const Bench s(5);
  for (SchemeKind kind : {SchemeKind::kPcpp, SchemeKind::kDistriFusion}) {
    const auto r = s.run({kind, 0.3, 2}, 4);
    for (int rank = 0; rank < 4; ++rank) {
      std::int64_t bytes = 0;
      for (const auto& e : r.trace) {
        if (e.event == TraceKind::kSend && e.rank == rank) bytes += e.bytes;
      }
      EXPECT_EQ(bytes, r.ledger.rank_bytes(rank, Phase::kWarmup) + r.ledger.rank_bytes(rank, Phase::kAsync));
    }
    EXPECT_EQ(r.ledger.passes(Phase::kWarmup), 2 * 2);
    EXPECT_EQ(r.ledger.passes(Phase::kAsync), 3 * 2);
  }
}

TEST(Simulation, RejectsInvalidSchemes) {
  const Bench s(3);
  EXPECT_THROW(Simulation(s.model, s.x, s.cond, s.guidance, s.sampler, Scheme{SchemeKind::kPcpp, 0.3, 0},
                          PatchLayout(16, 2)),
               InvalidConfig);
  EXPECT_THROW(Simulation(s.model, s.x, s.cond, s.guidance, s.sampler, Scheme{SchemeKind::kSerial, 0.3, 1},
                          PatchLayout(16, 2)),
               InvalidConfig);
}

}  // namespace
}  // namespace pcpp
