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

#include "pcpp/exact_sum.h"

#include <cmath>

#include "pcpp/error.h"

namespace pcpp {

namespace {
constexpr std::int64_t kRadix = std::int64_t{1} << 32;
constexpr std::uint32_t kNormalizeEvery = 1u << 30;
}  // namespace

void ExactSum::add(double x) {
  if (x == 0.0) return;
  if (!std::isfinite(x)) throw NumericalError("ExactSum: non-finite input");
  int exponent = 0;
  const double fraction = std::frexp(x, &exponent);
  const auto mantissa = static_cast<std::int64_t>(std::ldexp(fraction, 53));
  const int position = exponent - 53 - kMinExponent;
  const int index = position / kLimbBits;
  const int shift = position % kLimbBits;
  const std::int64_t sign = mantissa < 0 ? -1 : 1;
  unsigned __int128 magnitude =
      static_cast<unsigned __int128>(static_cast<std::uint64_t>(mantissa * sign)) << shift;
  for (int k = 0; magnitude != 0; ++k) {
    limbs_[index + k] += sign * static_cast<std::int64_t>(magnitude & 0xffffffffu);
    magnitude >>= kLimbBits;
  }
  if (++unnormalized_adds_ >= kNormalizeEvery) normalize();
}

void ExactSum::merge(const ExactSum& other) {
  ExactSum rhs = other;
  rhs.normalize();
  normalize();
  for (int i = 0; i < kLimbs; ++i) limbs_[i] += rhs.limbs_[i];
  normalize();
}

void ExactSum::normalize() {
  for (int i = 0; i + 1 < kLimbs; ++i) {
    // Floor division keeps every limb but the top one in [0, 2^32).
    std::int64_t carry = limbs_[i] / kRadix;
    if (limbs_[i] - carry * kRadix < 0) --carry;
    limbs_[i] -= carry * kRadix;
    limbs_[i + 1] += carry;
  }
  unnormalized_adds_ = 0;
}

double ExactSum::value() const {
  ExactSum copy = *this;
  copy.normalize();
  const bool negative = copy.limbs_[kLimbs - 1] < 0;
  if (negative) {
    for (auto& limb : copy.limbs_) limb = -limb;
    copy.normalize();
  }
  double total = 0.0;
  for (int i = 0; i < kLimbs; ++i) {
    if (copy.limbs_[i] != 0) {
      total += std::ldexp(static_cast<double>(copy.limbs_[i]), i * kLimbBits + kMinExponent);
    }
  }
  return negative ? -total : total;
}

bool operator==(const ExactSum& a, const ExactSum& b) {
  ExactSum x = a, y = b;
  x.normalize();
  y.normalize();
  return x.limbs_ == y.limbs_;
}

}  // namespace pcpp
