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

#include "pcpp/protocol/scheduler.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace pcpp {

SchedulePolicy SchedulePolicy::adversarial(int devices) {
  std::vector<int> order(static_cast<std::size_t>(devices));
  std::iota(order.rbegin(), order.rend(), 0);
  return priority(std::move(order));
}

void SchedulePolicy::validate(int devices) const {
  if (kind != Kind::kPriority) return;
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(static_cast<std::size_t>(devices));
  std::iota(expected.begin(), expected.end(), 0);
  if (sorted != expected) throw InvalidConfig("priority order must be a permutation of the device ranks");
}

std::string policy_name(const SchedulePolicy& policy) {
  switch (policy.kind) {
    case SchedulePolicy::Kind::kLockstep:
      return "lockstep";
    case SchedulePolicy::Kind::kRandom:
      return "random:" + std::to_string(policy.seed);
    case SchedulePolicy::Kind::kPriority: {
      std::string out = "priority:";
      for (std::size_t i = 0; i < policy.order.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(policy.order[i]);
      }
      return out;
    }
  }
  return "lockstep";
}

SchedulePolicy parse_policy(const std::string& text, int devices) {
  SchedulePolicy policy;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "lockstep" && rest.empty()) {
    policy = SchedulePolicy::lockstep();
  } else if (head == "adversarial" && rest.empty()) {
    policy = SchedulePolicy::adversarial(devices);
  } else if (head == "random" && !rest.empty()) {
    try {
      std::size_t used = 0;
      policy = SchedulePolicy::random(std::stoull(rest, &used));
      if (used != rest.size()) throw InvalidConfig("bad random seed");
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad random seed in policy '" + text + "'");
    }
  } else if (head == "priority" && !rest.empty()) {
    std::vector<int> order;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        order.push_back(std::stoi(item));
      } catch (const std::logic_error&) {
        throw InvalidConfig("bad rank in policy '" + text + "'");
      }
    }
    policy = SchedulePolicy::priority(std::move(order));
  } else {
    throw InvalidConfig("unknown schedule policy '" + text + "'");
  }
  policy.validate(devices);
  return policy;
}

std::vector<int> drive(std::vector<Process>& programs, const SchedulePolicy& policy,
                       const ReadyFn& ready, const WaitGraphFn& wait_graph) {
  const int n = static_cast<int>(programs.size());
  policy.validate(n);
  std::vector<bool> started(programs.size(), false);
  auto runnable = [&](int i) {
    const auto& p = programs[static_cast<std::size_t>(i)];
    if (p.done()) return false;
    if (!started[static_cast<std::size_t>(i)] || p.last() != Yield::kBlocked) return true;
    return ready(i);
  };
  auto step = [&](int i) {
    started[static_cast<std::size_t>(i)] = true;
    programs[static_cast<std::size_t>(i)].resume();
  };

  std::vector<int> slices;
  std::mt19937_64 rng(policy.seed);
  std::vector<int> candidates;
  int cursor = 0;
  for (;;) {
    candidates.clear();
    for (int i = 0; i < n; ++i) {
      if (runnable(i)) candidates.push_back(i);
    }
    if (candidates.empty()) {
      const bool finished = std::all_of(programs.begin(), programs.end(), [](const Process& p) { return p.done(); });
      if (finished) return slices;
      throw DeadlockError("no runnable device while communication is incomplete", wait_graph());
    }
    int chosen = candidates.front();
    switch (policy.kind) {
      case SchedulePolicy::Kind::kLockstep: {
        // next runnable at or after the cursor
        chosen = -1;
        for (int off = 0; off < n && chosen < 0; ++off) {
          const int i = (cursor + off) % n;
          if (runnable(i)) chosen = i;
        }
        cursor = (chosen + 1) % n;
        break;
      }
      case SchedulePolicy::Kind::kRandom: {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        chosen = candidates[pick(rng)];
        break;
      }
      case SchedulePolicy::Kind::kPriority:
        for (int r : policy.order) {
          if (runnable(r)) {
            chosen = r;
            break;
          }
        }
        break;
    }
    slices.push_back(chosen);
    step(chosen);
  }
}

}  // namespace pcpp
