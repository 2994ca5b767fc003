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

// Whether subset shares are a rescaled copy of full-population shares.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "asattr/attribution.hpp"
#include "asattr/baselines.hpp"
#include "asattr/core.hpp"
#include "asattr/ranks.hpp"
#include "asattr/valuefn.hpp"

namespace asattr {

struct RescaleReport {
  double c_star = 0.0;
  double epsilon = 0.0;  // relative residual of the best single rescale
  double spearman = 0.0;
};

// c* = <s, p> / <p, p>, eps = |s - c* p| / |s| for subset shares s and
// full-population shares p read at the same agents (not renormalized).
inline RescaleReport OptimalRescale(std::span<const double> subset_shares,
                                    std::span<const double> full_shares) {
  Require(subset_shares.size() == full_shares.size() &&
              subset_shares.size() >= 2,
          "rescale test needs equal lengths >= 2");
  double sp = 0.0;
  double pp = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < subset_shares.size(); ++i) {
    sp += subset_shares[i] * full_shares[i];
    pp += full_shares[i] * full_shares[i];
    ss += subset_shares[i] * subset_shares[i];
  }
  if (pp == 0.0 || ss == 0.0) {
    Fail(ErrorKind::kDegenerate, "rescale test: zero-norm share vector");
  }
  RescaleReport r;
  r.c_star = sp / pp;
  double res = 0.0;
  for (std::size_t i = 0; i < subset_shares.size(); ++i) {
    const double e = subset_shares[i] - r.c_star * full_shares[i];
    res += e * e;
  }
  r.epsilon = std::sqrt(res) / std::sqrt(ss);
  r.spearman = SpearmanRho(subset_shares, full_shares);
  return r;
}

// c(S, z) = sum over all agents of mu / sum over S of mu, with mu the
// per-agent contribution mu(z_i) - mu(z0).
inline double LinearReconciliationFactor(std::span<const double> mu_full,
                                         std::span<const std::size_t> subset) {
  Require(!subset.empty(), "reconciliation factor needs a nonempty subset");
  double sub = 0.0;
  for (std::size_t i : subset) {
    Require(i < mu_full.size(), "reconciliation factor: index out of range");
    sub += mu_full[i];
  }
  const double full = PairwiseSum(mu_full);
  if (sub == 0.0 || full == 0.0) {
    Fail(ErrorKind::kDegenerate, "reconciliation factor: zero contribution sum");
  }
  return full / sub;
}

struct CounterexampleReport {
  std::vector<double> phi_full;         // analytic, all three agents
  double delta_v_full = 0.0;
  std::vector<double> shares_full;
  std::vector<double> phi_subset;       // S = {1, 3}
  double delta_v_subset = 0.0;
  std::vector<double> shares_subset;
  std::vector<double> implied_c;        // per agent of S
  std::vector<double> phi_full_shapley; // exact Shapley, pin-to-baseline game
  std::vector<double> phi_full_path;    // midpoint, K = 300
  std::vector<double> phi_subset_path;
  RescaleReport rescale;
};

// f_n = (1/n^2) sum_{i<j} z_i z_j at z = (1, 1, 2), z0 = 0, S = {1, 3}.
inline CounterexampleReport CounterexampleCheck() {
  CounterexampleReport r;
  const FeatureMatrix z(3, 1, std::vector<double>{1.0, 1.0, 2.0});
  const std::vector<std::size_t> subset = {0, 2};
  const FeatureMatrix zs = z.SelectRows(subset);

  // Closed form for this family: phi_i = (1/n^2) * z_i * (sum_{k != i} z_k) / 2.
  auto closed = [](const FeatureMatrix& x) {
    const std::size_t n = x.rows();
    const double n2 = static_cast<double>(n * n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += x(i, 0);
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = x(i, 0) * (total - x(i, 0)) / (2.0 * n2);
    }
    return phi;
  };
  const auto f3 = ValueFunction::PairwiseProductMean(3);
  const auto f2 = ValueFunction::PairwiseProductMean(2);

  r.phi_full = closed(z);
  r.delta_v_full = f3.Evaluate(z) - f3.EmptyValue();
  r.phi_subset = closed(zs);
  r.delta_v_subset = f2.Evaluate(zs) - f2.EmptyValue();
  for (double p : r.phi_full) r.shares_full.push_back(p / r.delta_v_full);
  for (double p : r.phi_subset) r.shares_subset.push_back(p / r.delta_v_subset);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    r.implied_c.push_back(r.shares_subset[k] / r.shares_full[subset[k]]);
  }

  const CoalitionGame game(f3, z, CoalitionSemantics::kPin);
  r.phi_full_shapley = ExactShapley(game).phi;
  r.phi_full_path = AttributePathIntegral(f3, z, BaselineSpec::Zero(), 300).phi;
  r.phi_subset_path =
      AttributePathIntegral(f2, zs, BaselineSpec::Zero(), 300).phi;

  const std::vector<double> full_at_s = {r.shares_full[0], r.shares_full[2]};
  r.rescale = OptimalRescale(r.shares_subset, full_at_s);
  return r;
}

}  // namespace asattr
