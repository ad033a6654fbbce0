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

#ifndef PCPP_SAMPLER_H_
#define PCPP_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "pcpp/noise.h"
#include "pcpp/schedule.h"
#include "pcpp/tensor.h"
#include "pcpp/toy_unet.h"

namespace pcpp {

struct GuidanceConfig {
  double scale = 5.0;
  bool enabled = true;

  void validate() const;
  // Forward passes per denoising step: unconditional + conditional, or
  // conditional only when guidance is off.
  int passes() const { return enabled ? 2 : 1; }
};

enum class SamplerVariant { kDdpmAncestral, kDdim };

struct SamplerConfig {
  SamplerVariant variant = SamplerVariant::kDdim;
  double eta = 0.0;
  int steps = 50;
  // Length of the underlying noise schedule; 0 means equal to steps. DDIM
  // visits timesteps k * (train_steps / steps) for k = steps..1.
  int train_steps = 0;
  ScheduleVariant schedule = ScheduleVariant::kLinear;
  std::uint64_t seed = 0;

  int schedule_steps() const { return train_steps == 0 ? steps : train_steps; }
  int stride() const;
  // Schedule timestep visited at sampling step k in [1, steps].
  int timestep(int k) const { return k * stride(); }
  void validate() const;
};

// eps_uncond + s * (eps_cond - eps_uncond); eps_cond when guidance is off.
LatentTensor cfg_combine(const LatentTensor& eps_uncond, const LatentTensor& eps_cond,
                         const GuidanceConfig& g);

// (1/sqrt(alpha_t)) * (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat).
LatentTensor reverse_mean(const LatentTensor& x_t, const LatentTensor& eps_hat, int t,
                          const NoiseSchedule& sched);

// One reverse update from schedule timestep t. Noise, when drawn, comes from
// noise.rows(t, row_begin, ...) so a patch starting at global row row_begin
// sees the same values as the whole-image run.
LatentTensor reverse_step(const LatentTensor& x_t, const LatentTensor& eps_hat, int t,
                          const NoiseSchedule& sched, const SamplerConfig& cfg,
                          const NoiseStream& noise, std::size_t row_begin = 0);

// Called per (sampling step k, pass, layer) with the layer output; pass 0 is
// unconditional when guidance is enabled.
using ActivationObserver =
    std::function<void(int step, int pass, std::size_t layer, const LatentTensor& output)>;

struct DenoiseResult {
  LatentTensor image;
  // trajectory[i] is the latent after the (i+1)-th denoising iteration.
  std::vector<LatentTensor> trajectory;
};

// Single-device ground truth: full attention on the whole image each pass.
DenoiseResult serial_denoise(const ToyUNet& model, const LatentTensor& x_T,
                             const Condition& cond, const GuidanceConfig& g,
                             const SamplerConfig& cfg, const ActivationObserver& observer = {});

}  // namespace pcpp

#endif  // PCPP_SAMPLER_H_
