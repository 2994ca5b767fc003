// Copyright 2026 The asattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "asattr/valuefn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace asattr {
namespace {

using testing::Column;
using testing::RandomAbsGaussian;
using testing::RandomGaussian;

double GiniDoubleLoop(const FeatureMatrix& z) {
  std::vector<double> g(z.rows(), 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t d = 0; d < z.cols(); ++d) g[i] += z(i, d);
  }
  double s = 0.0;
  for (double a : g) {
    for (double b : g) s += std::abs(a - b);
  }
  const double n = static_cast<double>(g.size());
  return s / (2.0 * n * n);
}

TEST(ValueFunctionTest, LinIsMeanOfRowSums) {
  EXPECT_DOUBLE_EQ(ValueFunction::Lin().Evaluate(Column({1, 1, 2})), 4.0 / 3.0);
}

TEST(ValueFunctionTest, HeatOfUnitRowsIsLogTwoForAnyN) {
  for (std::size_t n : {1u, 5u, 37u}) {
    FeatureMatrix z(n, 3, 1.0);
    EXPECT_NEAR(ValueFunction::Heat().Evaluate(z), std::log(2.0), 1e-15) << n;
  }
}

TEST(ValueFunctionTest, GiniOfTwoAgents) {
  const FeatureMatrix z = Column({1, 3});
  EXPECT_NEAR(ValueFunction::Gini().Evaluate(z), 0.5, 1e-15);
  EXPECT_NEAR(GiniDoubleLoop(z), 0.5, 1e-15);
}

TEST(ValueFunctionTest, GiniSortedRankMatchesDoubleLoop) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const auto z = RandomAbsGaussian(n, 1 + rng() % 3, rng());
    const double want = GiniDoubleLoop(z);
    EXPECT_NEAR(ValueFunction::Gini().Evaluate(z), want, 1e-12 * std::max(1.0, want))
        << "n=" << n;
  }
}

TEST(ValueFunctionTest, VarIsPopulationVariance) {
  EXPECT_DOUBLE_EQ(ValueFunction::Var().Evaluate(Column({0, 2})), 1.0);
  EXPECT_DOUBLE_EQ(ValueFunction::Var().Evaluate(Column({1, 2, 3, 4})), 1.25);
}

TEST(ValueFunctionTest, LinGradientIsConstant) {
  const auto g = ValueFunction::Lin().Gradient(RandomAbsGaussian(7, 3, 1)).grad;
  for (double v : g.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
}

TEST(ValueFunctionTest, VarGradientMatchesFiniteDifference) {
  const FeatureMatrix z = Column({0, 2});
  const auto f = ValueFunction::Var();
  const auto g = f.Gradient(z).grad;
  EXPECT_DOUBLE_EQ(g(1, 0), 1.0);
  // Independent central difference.
  const double h = 1e-6;
  FeatureMatrix up = z, down = z;
  up(1, 0) += h;
  down(1, 0) -= h;
  EXPECT_LT(std::abs((f.Evaluate(up) - f.Evaluate(down)) / (2 * h) - g(1, 0)), 1e-6);
}

TEST(ValueFunctionTest, PairwiseProductGradient) {
  const auto f = ValueFunction::PairwiseProductMean(3);
  const FeatureMatrix z = Column({1, 1, 2});
  EXPECT_NEAR(f.Evaluate(z), 5.0 / 9.0, 1e-15);
  const auto g = f.Gradient(z).grad;
  EXPECT_NEAR(g(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g(1, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g(2, 0), 2.0 / 9.0, 1e-15);
}

std::vector<ValueFunction> AllBuiltIns(std::size_t n, std::size_t dims,
                                       std::uint64_t seed) {
  FeatureMatrix c = RandomGaussian(n, n, seed + 1);
  for (std::size_t i = 0; i < n; ++i) {
    c(i, i) = 0.0;
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
  }
  return {ValueFunction::Lin(),
          ValueFunction::Heat(),
          ValueFunction::Var(),
          ValueFunction::Gini(),
          ValueFunction::Additive(RandomGaussian(n, dims, seed + 2)),
          ValueFunction::QuadraticCross(RandomGaussian(n, dims, seed + 3), c),
          ValueFunction::Softplus(0.35, RandomGaussian(n, dims, seed + 4))};
}

TEST(ValueFunctionTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    const std::size_t dims = 1 + rng() % 3;
    const auto z = RandomAbsGaussian(n, dims, rng());
    for (const auto& f : AllBuiltIns(n, dims, rng())) {
      const auto analytic = f.Gradient(z).grad;
      FeatureMatrix probe = z;
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dims; ++d) {
          const double h = 1e-6 * std::max(1.0, std::abs(z(i, d)));
          probe(i, d) = z(i, d) + h;
          const double up = f.Evaluate(probe);
          probe(i, d) = z(i, d) - h;
          const double down = f.Evaluate(probe);
          probe(i, d) = z(i, d);
          worst = std::max(worst, std::abs((up - down) / (2 * h) - analytic(i, d)));
        }
      }
      EXPECT_LT(worst, 1e-5) << f.name() << " n=" << n;
    }
  }
}

TEST(ValueFunctionTest, PermutationInvariantKinds) {
  std::mt19937_64 rng(3);
  const auto z = RandomAbsGaussian(40, 3, 9);
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto zp = z.SelectRows(perm);
  const std::vector<ValueFunction> fs = {
      ValueFunction::Lin(), ValueFunction::Heat(), ValueFunction::Var(),
      ValueFunction::Gini(), ValueFunction::Softplus(0.35, RandomGaussian(1, 3, 2))};
  for (const auto& f : fs) {
    ASSERT_TRUE(f.PermutationInvariant()) << f.name();
    EXPECT_NEAR(f.Evaluate(z), f.Evaluate(zp), 1e-12) << f.name();
  }
  EXPECT_FALSE(ValueFunction::Additive(RandomGaussian(40, 3, 1)).PermutationInvariant());
  EXPECT_FALSE(ValueFunction::PairwiseProductMean(40).PermutationInvariant());
}

TEST(ValueFunctionTest, HeatAlongRayIsCubic) {
  const auto z = RandomAbsGaussian(25, 3, 4);
  const auto f = ValueFunction::Heat();
  const double h = std::expm1(f.Evaluate(z));
  for (double tau : {0.1, 0.5, 0.9}) {
    FeatureMatrix x = z;
    for (double& v : x.values()) v *= tau;
    EXPECT_NEAR(f.Evaluate(x), std::log1p(tau * tau * tau * h), 1e-14);
  }
}

TEST(ValueFunctionTest, HeatZeroColumnGivesZeroValueAndFiniteGradient) {
  FeatureMatrix z = RandomAbsGaussian(5, 3, 1);
  for (std::size_t i = 0; i < 5; ++i) z(i, 1) = 0.0;
  const auto f = ValueFunction::Heat();
  EXPECT_EQ(f.Evaluate(z), 0.0);
  const auto g = f.Gradient(z).grad;
  EXPECT_TRUE(g.AllFinite());
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_GT(g(0, 1), 0.0);
}

TEST(ValueFunctionTest, GiniTiesAreFlaggedAndSymmetric) {
  const auto r = ValueFunction::Gini().Gradient(Column({2, 1, 2}));
  EXPECT_TRUE(r.rank_ties);
  EXPECT_DOUBLE_EQ(r.grad(0, 0), r.grad(2, 0));
  EXPECT_FALSE(ValueFunction::Gini().Gradient(Column({1, 2, 3})).rank_ties);
}

TEST(ValueFunctionTest, HessianProbe) {
  const auto z3 = Column({1, 1, 2});
  const auto entries = SampleOffDiagonalEntries(3, 1, 12, 7);
  EXPECT_LE(HessianOffDiagonalProbe(ValueFunction::Lin(), z3, entries), 1e-6);
  EXPECT_NEAR(HessianOffDiagonalProbe(ValueFunction::PairwiseProductMean(3), z3, entries),
              1.0 / 9.0, 1e-6);
  // Mixed partial of log(1 + m_a m_b m_c) at unit rows is +-1/(4 n^2).
  const FeatureMatrix ones(3, 3, 1.0);
  const auto e3 = SampleOffDiagonalEntries(3, 3, 12, 8);
  const double probe = HessianOffDiagonalProbe(ValueFunction::Heat(), ones, e3);
  EXPECT_GT(probe, 1e-4);
  EXPECT_NEAR(probe, 1.0 / 36.0, 1e-6);
}

TEST(ValueFunctionTest, RejectsBadInput) {
  const auto f = ValueFunction::Var();
  try {
    f.Evaluate(FeatureMatrix(0, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  FeatureMatrix z = Column({1, NAN});
  try {
    f.Evaluate(z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(ValueFunctionTest, RejectsInvalidParameters) {
  FeatureMatrix c(2, 2, 0.0);
  c(0, 1) = 1.0;
  EXPECT_THROW(ValueFunction::QuadraticCross(FeatureMatrix(1, 1), c), Error);
  c(1, 0) = 1.0;
  c(0, 0) = 0.5;
  EXPECT_THROW(ValueFunction::QuadraticCross(FeatureMatrix(1, 1), c), Error);
  EXPECT_THROW(ValueFunction::Softplus(0.0, FeatureMatrix(1, 1, 1.0)), Error);
  EXPECT_THROW(ValueFunction::Additive(FeatureMatrix(2, 2)).Evaluate(FeatureMatrix(3, 2)),
               Error);
  EXPECT_THROW(ValueFunction::FromKind(ValueKind::kSoftplus), Error);
}

TEST(ValueFunctionTest, CustomUsesFiniteDifferencesWithoutGradient) {
  CustomCallbacks cb;
  cb.evaluate = [](const FeatureMatrix& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return s;
  };
  const auto f = ValueFunction::Custom(cb, "sumsq");
  const auto z = RandomAbsGaussian(4, 2, 3);
  const auto g = f.Gradient(z).grad;
  for (std::size_t k = 0; k < g.values().size(); ++k) {
    EXPECT_NEAR(g.values()[k], 2.0 * z.values()[k], 1e-6);
  }
  EXPECT_EQ(f.name(), "sumsq");
}

TEST(ValueFunctionTest, SubsetIndexSelectsWeights) {
  const FeatureMatrix w(3, 1, std::vector<double>{1.0, 10.0, 100.0});
  const auto f = ValueFunction::Additive(w);
  const std::vector<std::size_t> idx = {0, 2};
  EXPECT_DOUBLE_EQ(f.Evaluate(Column({1, 1}), idx), 101.0);
}

TEST(ValueFunctionTest, ParseNames) {
  EXPECT_EQ(ParseValueKind("heat"), ValueKind::kHeat);
  EXPECT_EQ(ParseValueKind("quadratic"), ValueKind::kQuadraticCross);
  EXPECT_THROW(ParseValueKind("nope"), Error);
}

}  // namespace
}  // namespace asattr
