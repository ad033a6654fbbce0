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

#ifndef PCPP_CONFIG_H_
#define PCPP_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "pcpp/patching.h"
#include "pcpp/protocol/scheduler.h"
#include "pcpp/sampler.h"
#include "pcpp/scheme.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

inline constexpr int kConfigSchemaVersion = 1;

// Everything needed to reproduce one run. `seed` drives the model weights,
// the initial latent and the sampler noise.
struct RunConfig {
  ModelShape model;
  SamplerConfig sampler;
  GuidanceConfig guidance;
  int devices = 4;
  SchemeKind scheme = SchemeKind::kPcpp;
  // Unset means the default for the device count (see default_partial).
  std::optional<double> partial;
  int warmup_steps = 4;
  std::string policy = "lockstep";
  std::uint64_t seed = 0;
  std::int64_t prompt_id = 0;
  std::string output_dir = "out";

  double effective_partial() const;
  Scheme make_scheme() const;
  PatchLayout layout() const;
  SchedulePolicy schedule_policy() const;
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&);
};

// 0.3 when the run occupies at most four physical devices (two per patch
// with guidance enabled), 0.8 above that.
double default_partial(int devices, const GuidanceConfig& guidance);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string to_config_text(const RunConfig& cfg);

}  // namespace pcpp

#endif  // PCPP_CONFIG_H_
