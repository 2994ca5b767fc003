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

#include "asattr/study.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "asattr/ranks.hpp"
#include "test_util.hpp"

namespace asattr {
namespace {

using testing::RandomAbsGaussian;

FeaturePanel ParetoPanel(std::size_t n, std::uint64_t seed, std::size_t steps = 7) {
  SyntheticPanelSpec spec;
  spec.n_agents = n;
  spec.n_steps = steps;
  spec.feature_law = FeatureLaw::kParetoReach;
  spec.reach_engagement_correlation = 0.7;
  spec.seed = seed;
  return GenerateSynthetic(spec);
}

TEST(SubsetTest, DeterministicSortedAndDistinct) {
  const auto m = ComputeAgentMetrics(ParetoPanel(2000, 1));
  for (SubsetProtocol p : AllProtocols()) {
    const auto a = SampleSubset(m, p, 50, 3);
    const auto b = SampleSubset(m, p, 50, 3);
    EXPECT_EQ(a.indices, b.indices) << ToString(p);
    EXPECT_EQ(a.indices.size(), 50u);
    EXPECT_TRUE(std::is_sorted(a.indices.begin(), a.indices.end()));
    EXPECT_EQ(std::adjacent_find(a.indices.begin(), a.indices.end()), a.indices.end());
    EXPECT_EQ(ParseSubsetProtocol(ToString(p)), p);
  }
  EXPECT_THROW(SampleSubset(m, SubsetProtocol::kRandom, 2001, 0), Error);
  EXPECT_THROW(ParseSubsetProtocol("nope"), Error);
}

TEST(SubsetTest, RandomFullSizeIsWholePopulation) {
  const auto m = ComputeAgentMetrics(ParetoPanel(300, 2));
  const auto s = SampleSubset(m, SubsetProtocol::kRandom, 300, 9);
  std::vector<std::size_t> all(300);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(s.indices, all);
}

TEST(SubsetTest, VisibilityOversamplesTopTier) {
  const auto panel = ParetoPanel(20000, 3);
  const auto m = ComputeAgentMetrics(panel);
  const auto part = MakeTierPartition(panel, AnchorMetric::Followers());
  double vis = 0.0, rnd = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    vis += CountInGroup(SampleSubset(m, SubsetProtocol::kBiasVisibility, 100, seed).indices,
                        part, 0);
    rnd += CountInGroup(SampleSubset(m, SubsetProtocol::kRandom, 100, seed).indices, part, 0);
  }
  // Random expects one top-1% member per 100; the visibility pool is 5% of N.
  EXPECT_GT(vis / 10.0, 5.0);
  EXPECT_LT(rnd / 10.0, 3.0);
}

TEST(SubsetTest, PoolPlusComplementWhenSubsetExceedsPool) {
  const auto m = ComputeAgentMetrics(ParetoPanel(400, 4));
  SubsetOptions opt;
  opt.pool_size = 30;
  const auto s = SampleSubset(m, SubsetProtocol::kBiasTopicTop, 100, 1, opt);
  EXPECT_EQ(s.pool, 30u);
  // Every pool member is present: the top-30 by topic posts.
  std::vector<std::size_t> order(400);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return m.topic_posts[a] > m.topic_posts[b];
  });
  for (std::size_t r = 0; r < 30; ++r) {
    EXPECT_TRUE(std::binary_search(s.indices.begin(), s.indices.end(), order[r]));
  }
}

double KendallTauBruteForce(const std::vector<double>& a, const std::vector<double>& b) {
  double conc = 0, disc = 0, ta = 0, tb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double x = a[i] - a[j];
      const double y = b[i] - b[j];
      if (x == 0 && y == 0) continue;
      if (x == 0) {
        ta += 1;
      } else if (y == 0) {
        tb += 1;
      } else if ((x > 0) == (y > 0)) {
        conc += 1;
      } else {
        disc += 1;
      }
    }
  }
  return (conc - disc) / std::sqrt((conc + disc + ta) * (conc + disc + tb));
}

TEST(RanksTest, KendallMatchesPairCountWithTies) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(60), b(60);
    for (auto& x : a) x = static_cast<double>(rng() % 7);
    for (auto& x : b) x = static_cast<double>(rng() % 5);
    EXPECT_NEAR(KendallTau(a, b), KendallTauBruteForce(a, b), 1e-12);
  }
}

TEST(RanksTest, IdenticalAndReversedRankings) {
  std::vector<double> a(20), r(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = static_cast<double>(i * i);
    r[i] = -a[i];
  }
  const auto same = CompareRankings(a, a, 5);
  EXPECT_DOUBLE_EQ(same.kendall_tau, 1.0);
  EXPECT_DOUBLE_EQ(same.spearman_rho, 1.0);
  EXPECT_DOUBLE_EQ(same.jaccard_top_k, 1.0);
  const auto rev = CompareRankings(a, r, 5);
  EXPECT_DOUBLE_EQ(rev.kendall_tau, -1.0);
  EXPECT_DOUBLE_EQ(rev.spearman_rho, -1.0);
}

TEST(RanksTest, SpearmanUsesAverageRanks) {
  const std::vector<double> x = {1, 2, 2, 3};
  EXPECT_EQ(AverageRanks(x), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_TRUE(std::isnan(PearsonCorrelation(std::vector<double>{1, 1, 1},
                                            std::vector<double>{1, 2, 3})));
}

TEST(DeletionTest, RemovingEveryoneGivesFullDrop) {
  const auto z = RandomAbsGaussian(10, 3, 1);
  std::vector<std::size_t> order(10);
  std::iota(order.begin(), order.end(), 0);
  for (const auto& f : {ValueFunction::Lin(), ValueFunction::Heat(), ValueFunction::Var()}) {
    const auto r = DeletionFaithfulnessAt(f, z, order, 10);
    EXPECT_NEAR(r.drops.back(), 1.0, 1e-12) << f.name();
  }
}

TEST(DeletionTest, LinRankingIsOptimalAtEveryK) {
  const std::size_t n = 10;
  const auto z = RandomAbsGaussian(n, 3, 2);
  const auto f = ValueFunction::Lin();
  const auto ranking = RankByAttribution(AttributeAnalytic(f, z).phi);
  const auto got = DeletionFaithfulnessAt(f, z, ranking, n);
  const double before = f.Evaluate(z);
  std::vector<double> best(n, -1e300);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    FeatureMatrix x = z;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) std::fill(x.row(i).begin(), x.row(i).end(), 0.0);
    }
    const std::size_t k = static_cast<std::size_t>(std::popcount(mask));
    best[k - 1] = std::max(best[k - 1], (before - f.Evaluate(x)) / before);
  }
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(got.drops[k], best[k], 1e-12);
}

TEST(DeletionTest, AttributionBeatsRandomOrder) {
  std::vector<FeatureMatrix> steps;
  for (std::uint64_t s = 0; s < 4; ++s) steps.push_back(RandomAbsGaussian(200, 3, 10 + s));
  const auto f = ValueFunction::Heat();
  const auto r = DeletionFaithfulness(f, steps, 20);
  EXPECT_GE(r.target_step, 1u);
  EXPECT_GT(r.auc, RandomDeletionAuc(f, steps, 20, 20, 1));
}

TEST(DeletionTest, TargetStepSearchesSecondHalf) {
  std::vector<FeatureMatrix> steps = {FeatureMatrix(3, 1, 9.0), FeatureMatrix(3, 1, 1.0),
                                      FeatureMatrix(3, 1, 2.0)};
  // T = 3: candidate steps are 2 and 3 (1-based).
  EXPECT_EQ(DeletionTargetStep(ValueFunction::Lin(), steps), 2u);
}

TEST(KSweepTest, ErrorFallsWithK) {
  const auto z = RandomAbsGaussian(500, 3, 3);
  const std::vector<int> ks = {5, 10, 20, 50, 100};
  const auto rows = KConvergenceSweep(ValueFunction::Heat(), z, ks);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].rel_l1, rows[i - 1].rel_l1);
  const auto soft = KConvergenceSweep(ValueFunction::Softplus(0.35, FeatureMatrix(1, 3, 1.0)),
                                      z, std::vector<int>{5, 50});
  EXPECT_LT(soft[1].rel_l1, soft[0].rel_l1);
}

TEST(BenchTest, MarksInfeasibleAndSkippedCells) {
  BenchConfig cfg;
  cfg.sizes = {10, 30};
  cfg.methods = {BenchMethod::kOursAnalytic, BenchMethod::kExactShapley,
                 BenchMethod::kSampledBanzhaf};
  cfg.m_samples = 10;
  cfg.repeats = 1;
  cfg.max_work = 20000;
  const auto rows = BenchScaling(cfg);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_GT(rows[0].seconds, 0.0);
  EXPECT_EQ(rows[1].status, "ok");
  EXPECT_EQ(rows[2].status, "ok");
  EXPECT_EQ(rows[4].status, "infeasible");
  EXPECT_EQ(rows[5].status, "skipped");
  EXPECT_TRUE(std::isnan(rows[5].seconds));
}

TEST(FlipTest, SharesSumToOneAndLinIsRescaled) {
  const auto panel = ParetoPanel(3000, 5);
  const auto metrics = ComputeAgentMetrics(panel);
  const auto part = MakeTierPartition(panel, AnchorMetric::Followers());
  FlipConfig cfg;
  cfg.functions = {ValueFunction::Lin(), ValueFunction::Var()};
  cfg.sizes = {100};
  cfg.seeds = {0, 1, 2};
  const auto report = FlipStudy(panel.Step(0), metrics, part, cfg);
  EXPECT_EQ(report.cells.size(), AllProtocols().size() * 2 * 3);
  for (const auto& c : report.cells) {
    if (c.degenerate) continue;
    EXPECT_NEAR(std::accumulate(c.shares.begin(), c.shares.end(), 0.0), 1.0, 1e-9);
    if (c.f_name == "lin") {
      EXPECT_LE(c.epsilon, 1e-9);
      EXPECT_NEAR(c.spearman, 1.0, 1e-12);
    }
  }
  for (const auto& s : report.full_shares) {
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-9);
  }
  EXPECT_EQ(report.aggregates.size(), AllProtocols().size() * 2);
}

TEST(DoseResponseTest, RandomMatchesExpectation) {
  const auto panel = ParetoPanel(5000, 6, 1);
  const auto metrics = ComputeAgentMetrics(panel);
  const auto part = MakeTierPartition(panel, AnchorMetric::Followers());
  std::vector<std::uint64_t> seeds(40);
  std::iota(seeds.begin(), seeds.end(), 0);
  const std::vector<SubsetProtocol> ps = {SubsetProtocol::kRandom};
  const auto rows = DoseResponse(metrics, part, ps, 500, seeds);
  // Hypergeometric mean 500 * 50 / 5000 = 5, sd about 2.
  EXPECT_NEAR(rows[0].mean_top_members, 5.0, 3.0 * 2.1 / std::sqrt(40.0));
}

TEST(MassByBinTest, BinsPartitionTotals) {
  const auto panel = ParetoPanel(100, 7, 3);
  const auto attr = AttributeTemporal(ValueFunction::Var(), panel, BaselineSpec::Zero(),
                                      AttributionMethod::Analytic());
  const auto mass = AttributionMassByBin(attr, ComputeAgentMetrics(panel).followers, 4);
  const auto steps = attr.StepTotals();
  for (std::size_t t = 0; t < 3; ++t) {
    double s = 0.0;
    for (std::size_t b = 0; b < 4; ++b) s += mass(t, b);
    EXPECT_NEAR(s, steps[t], 1e-12);
  }
}

}  // namespace
}  // namespace asattr
