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

#ifndef PCPP_NOISE_H_
#define PCPP_NOISE_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "pcpp/tensor.h"

namespace pcpp {

// Generator seeded from a tuple of 64-bit keys; every key contributes both
// 32-bit halves to the seed sequence.
std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> key);

// Standard-normal noise addressed by (seed, step, global row). Each grid row
// has its own generator, so a device holding rows [b, b+h) draws exactly the
// values the single-device run draws for those rows.
class NoiseStream {
 public:
  // Step key reserved for the initial latent x_T.
  static constexpr int kInitialStep = 0;

  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  LatentTensor rows(int step, std::size_t row_begin, std::size_t row_count, std::size_t width,
                    std::size_t channels) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

LatentTensor initial_latent(std::uint64_t seed, std::size_t height, std::size_t width,
                            std::size_t channels);

}  // namespace pcpp

#endif  // PCPP_NOISE_H_
