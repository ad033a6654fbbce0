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

#ifndef PCPP_EXACT_SUM_H_
#define PCPP_EXACT_SUM_H_

#include <array>
#include <cstdint>

namespace pcpp {

// Order-independent exact accumulator for finite doubles.
//
// Every finite double is an integer multiple of 2^-1126 once its 53-bit
// mantissa is shifted into place, so sums are held as a fixed-point integer
// in base-2^32 limbs. Any grouping or order of add()/merge() calls yields the
// same canonical state, hence the same value(). Group-norm statistics rely on
// this so that patch-parallel partial sums reproduce the single-device result
// bit for bit.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double value() const;

  friend bool operator==(const ExactSum& a, const ExactSum& b);

 private:
  static constexpr int kLimbBits = 32;
  static constexpr int kMinExponent = -1152;
  static constexpr int kLimbs = 72;

  void normalize();

  std::array<std::int64_t, kLimbs> limbs_{};
  std::uint32_t unnormalized_adds_ = 0;
};

}  // namespace pcpp

#endif  // PCPP_EXACT_SUM_H_
