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

#ifndef PCPP_SCHEME_H_
#define PCPP_SCHEME_H_

#include <string>
#include <string_view>

namespace pcpp {

enum class SchemeKind {
  kSerial,        // one device, full attention
  kDistriFusion,  // per-layer async AllGather, stale full-image K/V
  kPcpp,          // point-to-point neighbor exchange, partial context
};

enum class Phase { kWarmup, kAsync };

std::string_view scheme_name(SchemeKind kind);
SchemeKind parse_scheme(std::string_view name);
std::string_view phase_name(Phase phase);

struct Scheme {
  SchemeKind kind = SchemeKind::kPcpp;
  double partial = 0.3;  // pcpp only
  int warmup_steps = 4;

  bool parallel() const { return kind != SchemeKind::kSerial; }
  void validate() const;
};

}  // namespace pcpp

#endif  // PCPP_SCHEME_H_
