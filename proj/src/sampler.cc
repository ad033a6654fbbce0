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

#include "pcpp/sampler.h"

#include <cmath>
#include <string>

#include "pcpp/error.h"

namespace pcpp {

void GuidanceConfig::validate() const {
  if (enabled && !(scale >= 1.0)) {
    throw InvalidConfig("guidance scale must be >= 1 when enabled, got " + std::to_string(scale));
  }
}

int SamplerConfig::stride() const {
  return steps == 0 ? 1 : schedule_steps() / steps;
}

void SamplerConfig::validate() const {
  if (steps < 0) throw InvalidConfig("sampler steps must be >= 0");
  if (train_steps < 0) throw InvalidConfig("train_steps must be >= 0");
  if (steps > 0 && schedule_steps() % steps != 0) {
    throw InvalidConfig("train_steps must be a multiple of steps");
  }
  if (variant == SamplerVariant::kDdpmAncestral && steps > 0 && stride() != 1) {
    throw InvalidConfig("ancestral sampling visits every schedule step; train_steps must equal steps");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidConfig("eta must lie in [0, 1]");
}

LatentTensor cfg_combine(const LatentTensor& eps_uncond, const LatentTensor& eps_cond,
                         const GuidanceConfig& g) {
  require_same_shape(eps_uncond, eps_cond, "cfg_combine");
  if (!g.enabled) return eps_cond;
  // Written around eps_cond so that s = 1 returns it exactly.
  LatentTensor out = eps_cond;
  auto dst = out.data();
  const auto uncond = eps_uncond.data();
  const double extra = g.scale - 1.0;
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += extra * (dst[i] - uncond[i]);
  return out;
}

LatentTensor reverse_mean(const LatentTensor& x_t, const LatentTensor& eps_hat, int t,
                          const NoiseSchedule& sched) {
  require_same_shape(x_t, eps_hat, "reverse_mean");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
  const double eps_coeff = sched.beta(t) / std::sqrt(1.0 - sched.alpha_bar(t));
  LatentTensor out(x_t.height(), x_t.width(), x_t.channels());
  auto dst = out.data();
  const auto x = x_t.data();
  const auto e = eps_hat.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = inv_sqrt_alpha * (x[i] - eps_coeff * e[i]);
  return out;
}

LatentTensor reverse_step(const LatentTensor& x_t, const LatentTensor& eps_hat, int t,
                          const NoiseSchedule& sched, const SamplerConfig& cfg,
                          const NoiseStream& noise, std::size_t row_begin) {
  require_same_shape(x_t, eps_hat, "reverse_step");
  if (t < 1 || t > sched.steps()) {
    throw InvalidStep("reverse_step: timestep " + std::to_string(t) + " outside [1, " +
                      std::to_string(sched.steps()) + "]");
  }
  auto draw = [&] {
    return noise.rows(t, row_begin, x_t.height(), x_t.width(), x_t.channels());
  };

  if (cfg.variant == SamplerVariant::kDdpmAncestral) {
    LatentTensor out = reverse_mean(x_t, eps_hat, t, sched);
    const double sigma = sched.sigma(t);
    if (t > 1 && sigma > 0.0) {
      const LatentTensor z = draw();
      auto dst = out.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sigma * z.data()[i];
    }
    return out;
  }

  const int prev = t - cfg.stride();
  if (prev < 0) throw InvalidStep("reverse_step: DDIM stride overshoots timestep 0");
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(prev);
  const double sigma = prev == 0 ? 0.0
                                 : cfg.eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_t)) *
                                       std::sqrt(1.0 - abar_t / abar_prev);
  const double sqrt_abar_t = std::sqrt(abar_t);
  const double sqrt_one_minus_abar_t = std::sqrt(1.0 - abar_t);
  const double sqrt_abar_prev = std::sqrt(abar_prev);
  const double dir_coeff = std::sqrt(std::max(0.0, 1.0 - abar_prev - sigma * sigma));

  LatentTensor out(x_t.height(), x_t.width(), x_t.channels());
  auto dst = out.data();
  const auto x = x_t.data();
  const auto e = eps_hat.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double x0 = (x[i] - sqrt_one_minus_abar_t * e[i]) / sqrt_abar_t;
    dst[i] = sqrt_abar_prev * x0 + dir_coeff * e[i];
  }
  if (sigma > 0.0) {
    const LatentTensor z = draw();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sigma * z.data()[i];
  }
  return out;
}

DenoiseResult serial_denoise(const ToyUNet& model, const LatentTensor& x_T,
                             const Condition& cond, const GuidanceConfig& g,
                             const SamplerConfig& cfg, const ActivationObserver& observer) {
  g.validate();
  cfg.validate();
  DenoiseResult result{x_T, {}};
  if (cfg.steps == 0) return result;
  const NoiseSchedule sched = build_schedule(cfg.schedule_steps(), cfg.schedule);
  const NoiseStream noise(cfg.seed);
  LatentTensor& x = result.image;
  for (int k = cfg.steps; k >= 1; --k) {
    const int t = cfg.timestep(k);
    auto pass_observer = [&](int pass) -> LayerObserver {
      if (!observer) return {};
      return [&observer, k, pass](std::size_t l, const LatentTensor& out) { observer(k, pass, l, out); };
    };
    LatentTensor eps_hat;
    if (g.enabled) {
      const LatentTensor eps_u = predict_noise(model, x, t, std::nullopt, AttentionMode::kFull, {},
                                               pass_observer(0));
      const LatentTensor eps_c = predict_noise(model, x, t, cond, AttentionMode::kFull, {},
                                               pass_observer(1));
      eps_hat = cfg_combine(eps_u, eps_c, g);
    } else {
      eps_hat = predict_noise(model, x, t, cond, AttentionMode::kFull, {}, pass_observer(0));
    }
    x = reverse_step(x, eps_hat, t, sched, cfg, noise, 0);
    if (!x.all_finite()) throw NumericalError("serial_denoise: non-finite latent at step " + std::to_string(k));
    result.trajectory.push_back(x);
  }
  return result;
}

}  // namespace pcpp
