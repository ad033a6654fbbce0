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

#ifndef PCPP_PROTOCOL_SCHEDULER_H_
#define PCPP_PROTOCOL_SCHEDULER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcpp/protocol/fabric.h"
#include "pcpp/protocol/process.h"

namespace pcpp {

// Order in which runnable device programs are resumed.
struct SchedulePolicy {
  enum class Kind {
    kLockstep,  // round robin, one slice per device per round
    kRandom,    // uniformly random runnable device each slice
    kPriority,  // always the first runnable device of `order`
  };

  Kind kind = Kind::kLockstep;
  std::uint64_t seed = 0;
  std::vector<int> order;

  static SchedulePolicy lockstep() { return {}; }
  static SchedulePolicy random(std::uint64_t seed) { return {Kind::kRandom, seed, {}}; }
  static SchedulePolicy priority(std::vector<int> order) { return {Kind::kPriority, 0, std::move(order)}; }
  // Highest rank first, each run until it blocks.
  static SchedulePolicy adversarial(int devices);

  void validate(int devices) const;
};

std::string policy_name(const SchedulePolicy& policy);
SchedulePolicy parse_policy(const std::string& text, int devices);

// Decides whether a program that last yielded kBlocked may be resumed.
using ReadyFn = std::function<bool(int rank)>;
using WaitGraphFn = std::function<DeadlockError::WaitForGraph()>;

// Resumes programs until all finish and returns the rank resumed at each
// slice. Throws DeadlockError when unfinished programs remain but none is
// runnable.
std::vector<int> drive(std::vector<Process>& programs, const SchedulePolicy& policy,
                       const ReadyFn& ready, const WaitGraphFn& wait_graph);

}  // namespace pcpp

#endif  // PCPP_PROTOCOL_SCHEDULER_H_
