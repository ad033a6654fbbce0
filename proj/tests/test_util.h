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

#ifndef PCPP_TESTS_TEST_UTIL_H_
#define PCPP_TESTS_TEST_UTIL_H_

#include <random>

#include "pcpp/tensor.h"

namespace pcpp::testing {

inline LatentTensor random_latent(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed,
                                  double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  LatentTensor x(h, w, c);
  for (double& v : x.data()) v = d(rng);
  return x;
}

}  // namespace pcpp::testing

#endif  // PCPP_TESTS_TEST_UTIL_H_
