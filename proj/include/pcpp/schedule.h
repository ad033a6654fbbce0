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

#ifndef PCPP_SCHEDULE_H_
#define PCPP_SCHEDULE_H_

#include <span>
#include <vector>

namespace pcpp {

enum class ScheduleVariant {
  kLinear,        // beta linear in t from 1e-4 to 0.02
  kScaledLinear,  // sqrt(beta) linear in t over the same endpoints
};

// Diffusion noise schedule indexed by timestep t in [1, T]. alpha_bar(0) is
// defined as 1 so the final reverse step has a well-defined predecessor.
class NoiseSchedule {
 public:
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;
  // Ancestral posterior standard deviation:
  // sigma_t^2 = beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
  double sigma(int t) const;

  std::span<const double> betas() const { return betas_; }
  std::span<const double> alpha_bars() const { return alpha_bars_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<double> sigmas_;
};

inline constexpr double kBetaStart = 1e-4;
inline constexpr double kBetaEnd = 0.02;

// A one-step schedule uses beta_1 = kBetaEnd.
NoiseSchedule build_schedule(int steps, ScheduleVariant variant = ScheduleVariant::kLinear);

}  // namespace pcpp

#endif  // PCPP_SCHEDULE_H_
