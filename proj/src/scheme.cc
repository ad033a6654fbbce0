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

#include "pcpp/scheme.h"

#include "pcpp/error.h"

namespace pcpp {

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kSerial: return "serial";
    case SchemeKind::kDistriFusion: return "distrifusion_allgather";
    case SchemeKind::kPcpp: return "pcpp_p2p";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "serial") return SchemeKind::kSerial;
  if (name == "distrifusion_allgather" || name == "distrifusion") return SchemeKind::kDistriFusion;
  if (name == "pcpp_p2p" || name == "pcpp") return SchemeKind::kPcpp;
  throw InvalidConfig("unknown scheme '" + std::string(name) + "'");
}

std::string_view phase_name(Phase phase) {
  return phase == Phase::kWarmup ? "warmup" : "async";
}

void Scheme::validate() const {
  if (parallel() && warmup_steps < 1) {
    throw InvalidConfig("parallel schemes need at least one warm-up step");
  }
  if (kind == SchemeKind::kPcpp && !(partial >= 0.0 && partial <= 1.0)) {
    throw InvalidConfig("partial value must lie in [0, 1]");
  }
}

}  // namespace pcpp
