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

#include "pcpp/schedule.h"

#include <cmath>
#include <string>

#include "pcpp/error.h"

namespace pcpp {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw InvalidConfig("noise schedule needs at least one step");
  NoiseSchedule s;
  double running = 1.0;
  double previous_beta = 0.0;
  for (double beta : betas) {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw InvalidConfig("beta must lie in (0, 1), got " + std::to_string(beta));
    }
    if (beta < previous_beta) throw InvalidConfig("betas must be non-decreasing");
    previous_beta = beta;
    const double alpha = 1.0 - beta;
    const double prev_bar = running;
    running *= alpha;
    s.alphas_.push_back(alpha);
    s.alpha_bars_.push_back(running);
    s.sigmas_.push_back(std::sqrt(beta * (1.0 - prev_bar) / (1.0 - running)));
  }
  s.betas_ = std::move(betas);
  return s;
}

namespace {
void check_t(int t, int steps) {
  if (t < 1 || t > steps) {
    throw InvalidStep("timestep " + std::to_string(t) + " outside [1, " +
                      std::to_string(steps) + "]");
  }
}
}  // namespace

double NoiseSchedule::beta(int t) const {
  check_t(t, steps());
  return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  check_t(t, steps());
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  check_t(t, steps());
  return alpha_bars_[t - 1];
}

double NoiseSchedule::sigma(int t) const {
  check_t(t, steps());
  return sigmas_[t - 1];
}

NoiseSchedule build_schedule(int steps, ScheduleVariant variant) {
  if (steps < 1) throw InvalidConfig("schedule needs T >= 1, got " + std::to_string(steps));
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 1.0 : static_cast<double>(i) / (steps - 1);
    switch (variant) {
      case ScheduleVariant::kLinear:
        betas[i] = kBetaStart + frac * (kBetaEnd - kBetaStart);
        break;
      case ScheduleVariant::kScaledLinear: {
        const double root = std::sqrt(kBetaStart) +
                            frac * (std::sqrt(kBetaEnd) - std::sqrt(kBetaStart));
        betas[i] = root * root;
        break;
      }
    }
  }
  return NoiseSchedule::from_betas(std::move(betas));
}

}  // namespace pcpp
