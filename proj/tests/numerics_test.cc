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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pcpp/error.h"
#include "pcpp/exact_sum.h"
#include "pcpp/noise.h"
#include "pcpp/patching.h"
#include "pcpp/schedule.h"
#include "pcpp/tensor.h"
#include "pcpp/toy_unet.h"
#include "test_util.h"

namespace pcpp {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

using testing::random_latent;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix m = random_matrix(3, 4, 1);
  EXPECT_EQ(matmul(Matrix::identity(3), m), m);
}

TEST(Matmul, HandComputedTwoByTwo) {
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix b(2, 1, {0, 1});
  EXPECT_EQ(matmul(a, b), Matrix(2, 1, {2, 4}));
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  const Matrix a = random_matrix(8, 8, 2), b = random_matrix(8, 8, 3);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      long double acc = 0;
      for (std::size_t k = 0; k < 8; ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      EXPECT_NEAR(c(i, j), static_cast<double>(acc), 1e-12);
    }
  }
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST(Softmax, SymmetricRow) {
  const Matrix p = softmax_rows(Matrix(1, 2, {0.0, 0.0}));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.5);
}

TEST(Softmax, LargeEqualLogitsDoNotOverflow) {
  const Matrix p = softmax_rows(Matrix(1, 3, {1000, 1000, 1000}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p(0, j), 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LogThreeGivesQuarterAndThreeQuarters) {
  const Matrix p = softmax_rows(Matrix(1, 2, {0.0, std::log(3.0)}));
  EXPECT_NEAR(p(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOne) {
  const Matrix p = softmax_rows(random_matrix(20, 33, 4));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (double v : p.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(LatentTensor, RejectsWrongDataLength) {
  EXPECT_THROW(LatentTensor(2, 2, 2, std::vector<double>(7)), ShapeError);
}

TEST(LatentTensor, TokenRoundTrip) {
  const LatentTensor x = random_latent(4, 3, 2, 5);
  EXPECT_EQ(from_tokens(to_tokens(x), 4, 3), x);
}

TEST(ExactSum, OrderAndGroupingIndependent) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(0.0, 1e3);
  std::vector<double> xs(500);
  for (double& v : xs) v = d(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
  ExactSum forward;
  for (double v : xs) forward.add(v);
  std::shuffle(xs.begin(), xs.end(), rng);
  ExactSum a, b;
  for (std::size_t i = 0; i < xs.size(); ++i) (i % 3 ? a : b).add(xs[i]);
  b.merge(a);
  EXPECT_EQ(forward, b);
  EXPECT_EQ(forward.value(), b.value());
}

TEST(ExactSum, CancellationIsExact) {
  ExactSum s;
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  EXPECT_EQ(s.value(), 1.0);
  ExactSum t;
  t.add(-3.5);
  t.add(1e-300);
  t.add(-1e-300);
  EXPECT_EQ(t.value(), -3.5);
}

TEST(ExactSum, MatchesLongDoubleOnModestInputs) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ExactSum s;
  long double ref = 0;
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    s.add(v);
    ref += v;
  }
  EXPECT_NEAR(s.value(), static_cast<double>(ref), 1e-15);
}

TEST(Schedule, SingleStep) {
  const NoiseSchedule s = build_schedule(1);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.02);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.98);
}

TEST(Schedule, AlphaBarEqualsIndependentRunningProduct) {
  const NoiseSchedule s = build_schedule(10);
  double prod = 1.0;
  for (int t = 1; t <= 10; ++t) {
    const double beta = 1e-4 + (0.02 - 1e-4) * (t - 1) / 9.0;
    EXPECT_NEAR(s.beta(t), beta, 1e-15);
    prod *= 1.0 - beta;
    EXPECT_NEAR(s.alpha_bar(t) / prod, 1.0, 1e-12);
  }
}

TEST(Schedule, InvariantsHoldForManyLengths) {
  for (ScheduleVariant v : {ScheduleVariant::kLinear, ScheduleVariant::kScaledLinear}) {
    for (int T : {1, 2, 7, 50, 1000}) {
      const NoiseSchedule s = build_schedule(T, v);
      double prod = 1.0;
      for (int t = 1; t <= T; ++t) {
        EXPECT_GT(s.beta(t), 0.0);
        EXPECT_LT(s.beta(t), 1.0);
        if (t > 1) {
          EXPECT_GE(s.beta(t), s.beta(t - 1));
          EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
        }
        EXPECT_DOUBLE_EQ(s.alpha(t), 1.0 - s.beta(t));
        prod *= s.alpha(t);
        EXPECT_NEAR(s.alpha_bar(t) / prod, 1.0, 1e-12);
        EXPECT_GE(s.sigma(t), 0.0);
      }
    }
  }
}

TEST(Schedule, OutOfRangeTimestepThrows) {
  const NoiseSchedule s = build_schedule(5);
  EXPECT_THROW(s.beta(0), InvalidStep);
  EXPECT_THROW(s.beta(6), InvalidStep);
  EXPECT_DOUBLE_EQ(s.alpha_bar(0), 1.0);
  EXPECT_THROW(build_schedule(0), InvalidConfig);
  EXPECT_THROW(NoiseSchedule::from_betas({0.1, 0.05}), InvalidConfig);
  EXPECT_THROW(NoiseSchedule::from_betas({0.0}), InvalidConfig);
}

TEST(GroupNorm, NormalizedGroupsHaveShiftMeanAndScaleVariance) {
  const LatentTensor x = random_latent(6, 5, 8, 8, 3.0);
  GroupNormWeights w;
  w.groups = 4;
  w.scale.assign(8, 1.7);
  w.shift.assign(8, -0.4);
  w.embed = Matrix(16, 8);
  const LatentTensor y = group_norm(w, x, compute_group_stats(x, 4), {});
  for (std::size_t g = 0; g < 4; ++g) {
    double sum = 0, sq = 0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t ch = 2 * g; ch < 2 * g + 2; ++ch) {
          sum += y.at(r, c, ch);
          ++count;
        }
    const double mean = sum / count;
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t ch = 2 * g; ch < 2 * g + 2; ++ch) sq += (y.at(r, c, ch) - mean) * (y.at(r, c, ch) - mean);
    EXPECT_NEAR(mean, -0.4, 1e-6);
    EXPECT_NEAR(sq / count, 1.7 * 1.7, 1e-5);
  }
}

TEST(GroupNorm, SplitStatisticsMergeToWholeImageStatistics) {
  const LatentTensor x = random_latent(16, 4, 8, 9);
  GroupStats merged = compute_group_stats(x.rows(8, 8), 4);
  merged.merge(compute_group_stats(x.rows(0, 8), 4));
  const GroupStats whole = compute_group_stats(x, 4);
  EXPECT_EQ(merged.count, whole.count);
  for (int g = 0; g < 4; ++g) {
    EXPECT_EQ(merged.sum[g], whole.sum[g]);
    EXPECT_EQ(merged.sum_sq[g], whole.sum_sq[g]);
  }
}

TEST(Conv, IdentityCenterKernelIsIdentityOnInterior) {
  ConvWeights w;
  w.in_channels = w.out_channels = 3;
  w.kernel.assign(9 * 9, 0.0);
  w.bias.assign(3, 0.0);
  for (std::size_t c = 0; c < 3; ++c) w.kernel[((1 * 3 + 1) * 3 + c) * 3 + c] = 1.0;  // [dr][dc][in][out]
  const LatentTensor x = random_latent(5, 6, 3, 10);
  const LatentTensor y = conv3x3(w, x, nullptr, nullptr);
  EXPECT_EQ(y, x);
}

TEST(Conv, HaloRowsMatchWholeImageConvolution) {
  const ToyUNet m = ToyUNet::build(ModelShape{}, 11);
  const ConvWeights& w = m.layer(2).conv();
  const LatentTensor x = random_latent(16, 16, 8, 12);
  const LatentTensor whole = conv3x3(w, x, nullptr, nullptr);
  const LatentTensor above = x.rows(3, 1), below = x.rows(8, 1);
  const LatentTensor part = conv3x3(w, x.rows(4, 4), &above, &below);
  EXPECT_EQ(part, whole.rows(4, 4));
}

TEST(Model, HasThreeLayerKindsPerBlock) {
  const ToyUNet m = ToyUNet::build(ModelShape{}, 0);
  ASSERT_EQ(m.layer_count(), 6u);
  for (std::size_t l = 0; l < 6; ++l) {
    const LayerKind expect = l % 3 == 0 ? LayerKind::kGroupNorm : l % 3 == 1 ? LayerKind::kAttention : LayerKind::kConv;
    EXPECT_EQ(m.layer(l).kind, expect);
  }
}

TEST(Model, WeightsArePureFunctionOfSeed) {
  const LatentTensor x = random_latent(16, 16, 8, 13);
  const Condition c = condition_embedding(3, 16);
  const auto a = predict_noise(ToyUNet::build(ModelShape{}, 5), x, 7, c);
  const auto b = predict_noise(ToyUNet::build(ModelShape{}, 5), x, 7, c);
  const auto other = predict_noise(ToyUNet::build(ModelShape{}, 6), x, 7, c);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, other);
}

TEST(Model, ZeroWeightModelIgnoresInput) {
  const ToyUNet m = ToyUNet::build(ModelShape{}, 1).with_zero_weights();
  const auto a = predict_noise(m, random_latent(16, 16, 8, 14), 3, std::nullopt);
  const auto b = predict_noise(m, random_latent(16, 16, 8, 15, 10.0), 3, std::nullopt);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.all_finite());
}

TEST(Model, NoLayersIsIdentity) {
  ModelShape shape;
  shape.blocks = 0;
  const LatentTensor x = random_latent(16, 16, 8, 16);
  EXPECT_EQ(predict_noise(ToyUNet::build(shape, 0), x, 4, std::nullopt), x);
}

TEST(Model, FullAttentionEqualsPartialWithSinglePatch) {
  const ToyUNet m = ToyUNet::build(ModelShape{}, 2);
  const LatentTensor x = random_latent(16, 16, 8, 17);
  const Condition c = condition_embedding(1, 16);
  const auto full = predict_noise(m, x, 9, c);
  const KvSource single_patch = [](std::size_t, const LatentTensor& local) {
    return kv_source_rows(local, context_from_neighbors(nullptr, nullptr, 0.7));
  };
  const auto partial = predict_noise(m, x, 9, c, AttentionMode::kPartial, single_patch);
  EXPECT_LE(max_abs_diff(full, partial), 1e-12);
}

TEST(Model, ShapeValidation) {
  ModelShape bad;
  bad.groups = 3;
  EXPECT_THROW(ToyUNet::build(bad, 0), InvalidConfig);
  const ToyUNet m = ToyUNet::build(ModelShape{}, 0);
  EXPECT_THROW(predict_noise(m, LatentTensor(16, 16, 4), 1, std::nullopt), ShapeError);
}

TEST(Noise, RowsAreAddressedByGlobalRow) {
  const NoiseStream n(42);
  const LatentTensor whole = n.rows(5, 0, 16, 4, 3);
  EXPECT_EQ(n.rows(5, 4, 8, 4, 3), whole.rows(4, 8));
  EXPECT_NE(n.rows(6, 0, 16, 4, 3), whole);
  EXPECT_NE(NoiseStream(43).rows(5, 0, 16, 4, 3), whole);
}

TEST(Noise, HighSeedBitsMatter) {
  const std::uint64_t lo = 7, hi = lo | (std::uint64_t{1} << 40);
  EXPECT_NE(initial_latent(lo, 2, 2, 2), initial_latent(hi, 2, 2, 2));
}

}  // namespace
}  // namespace pcpp
