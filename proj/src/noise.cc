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

#include "pcpp/noise.h"

#include <random>
#include <vector>

namespace pcpp {

std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

LatentTensor NoiseStream::rows(int step, std::size_t row_begin, std::size_t row_count,
                               std::size_t width, std::size_t channels) const {
  std::vector<double> data;
  data.reserve(row_count * width * channels);
  for (std::size_t r = row_begin; r < row_begin + row_count; ++r) {
    std::mt19937_64 engine = keyed_engine({seed_, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(r)});
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t i = 0; i < width * channels; ++i) data.push_back(dist(engine));
  }
  return LatentTensor(row_count, width, channels, std::move(data));
}

LatentTensor initial_latent(std::uint64_t seed, std::size_t height, std::size_t width,
                            std::size_t channels) {
  return NoiseStream(seed).rows(NoiseStream::kInitialStep, 0, height, width, channels);
}

}  // namespace pcpp
