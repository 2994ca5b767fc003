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

// Aumann-Shapley attribution of a value function's change between a baseline
// configuration z0 and an observed configuration z.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "asattr/core.hpp"
#include "asattr/panel.hpp"
#include "asattr/valuefn.hpp"

namespace asattr {

inline constexpr int kDefaultK = 30;

enum class MethodKind { kAnalytic, kMidpoint, kPermutedPath };

struct AttributionMethod {
  MethodKind kind = MethodKind::kMidpoint;
  int K = kDefaultK;
  std::uint64_t seed = 0;  // permuted path only

  static AttributionMethod Analytic() { return {MethodKind::kAnalytic, 0, 0}; }
  static AttributionMethod Midpoint(int K = kDefaultK) {
    return {MethodKind::kMidpoint, K, 0};
  }
  static AttributionMethod PermutedPath(int K, std::uint64_t seed) {
    return {MethodKind::kPermutedPath, K, seed};
  }

  std::string ToString() const {
    switch (kind) {
      case MethodKind::kAnalytic: return "analytic";
      case MethodKind::kMidpoint: return "midpoint(" + std::to_string(K) + ")";
      case MethodKind::kPermutedPath:
        return "permuted_path(" + std::to_string(K) + "," +
               std::to_string(seed) + ")";
    }
    return "?";
  }
};

enum class BaselineKind { kZero, kPopulationMean, kFirstStep, kCustomVector };

inline std::string_view ToString(BaselineKind k) {
  switch (k) {
    case BaselineKind::kZero: return "zero";
    case BaselineKind::kPopulationMean: return "population_mean";
    case BaselineKind::kFirstStep: return "first_step";
    case BaselineKind::kCustomVector: return "custom_vector";
  }
  return "?";
}

inline BaselineKind ParseBaselineKind(std::string_view s) {
  if (s == "zero") return BaselineKind::kZero;
  if (s == "population_mean" || s == "mean") return BaselineKind::kPopulationMean;
  if (s == "first_step") return BaselineKind::kFirstStep;
  if (s == "custom_vector" || s == "custom") return BaselineKind::kCustomVector;
  Fail(ErrorKind::kUsage, "unknown baseline '" + std::string(s) + "'");
}

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kZero;
  std::vector<double> vector;  // custom_vector only, length D

  static BaselineSpec Zero() { return {}; }
  static BaselineSpec PopulationMean() {
    return {BaselineKind::kPopulationMean, {}};
  }
  static BaselineSpec FirstStep() { return {BaselineKind::kFirstStep, {}}; }
  static BaselineSpec Custom(std::vector<double> v) {
    return {BaselineKind::kCustomVector, std::move(v)};
  }
};

// n x D baseline rows for one configuration. population_mean averages the
// rows of `z`; first_step has no meaning without a panel.
inline FeatureMatrix ResolveBaseline(const BaselineSpec& spec,
                                     const FeatureMatrix& z) {
  switch (spec.kind) {
    case BaselineKind::kZero:
      return FeatureMatrix(z.rows(), z.cols(), 0.0);
    case BaselineKind::kPopulationMean: {
      const auto m = detail::ColumnMeans(z);
      return FeatureMatrix::Broadcast(z.rows(), m);
    }
    case BaselineKind::kCustomVector: {
      Require(spec.vector.size() == z.cols(),
              "custom baseline must have length D");
      for (double v : spec.vector) {
        Require(std::isfinite(v), "custom baseline must be finite");
      }
      return FeatureMatrix::Broadcast(z.rows(), spec.vector);
    }
    case BaselineKind::kFirstStep:
      Fail(ErrorKind::kUsage, "first_step baseline needs a temporal panel");
  }
  return {};
}

struct AttributionResult {
  std::vector<double> phi;
  double delta_v = 0.0;
  std::optional<std::vector<double>> normalized;
  FeatureMatrix baseline;
  AttributionMethod method;
  bool rank_ties = false;  // gini gradient met tied values

  double EfficiencyResidual() const {
    return std::abs(PairwiseSum(phi) - delta_v);
  }
};

// Closed forms along tau * z (zero baseline only).
inline AttributionResult AttributeAnalytic(const ValueFunction& f,
                                           const FeatureMatrix& z,
                                           const BaselineSpec& baseline = {}) {
  if (!f.HasAnalyticAttribution()) {
    Fail(ErrorKind::kUsage, "no closed form for " + f.name() +
                                "; use the midpoint method");
  }
  if (baseline.kind != BaselineKind::kZero) {
    Fail(ErrorKind::kUsage,
         "closed forms need the zero baseline; use --method midpoint for " +
             std::string(ToString(baseline.kind)));
  }
  const double value = f.Evaluate(z);
  const std::size_t n = z.rows();
  const double nd = static_cast<double>(n);
  AttributionResult r;
  r.method = AttributionMethod::Analytic();
  r.baseline = FeatureMatrix(1, z.cols(), 0.0);
  r.delta_v = value - f.EmptyValue();
  r.phi.resize(n);
  const auto g = detail::RowSums(z);
  switch (f.kind()) {
    case ValueKind::kLin:
      for (std::size_t i = 0; i < n; ++i) r.phi[i] = g[i] / nd;
      break;
    case ValueKind::kHeat: {
      std::vector<double> colsum(z.cols());
      for (std::size_t d = 0; d < z.cols(); ++d) {
        colsum[d] = PairwiseSumOf(0, n, [&](std::size_t i) { return z(i, d); });
      }
      const double per_dim = value / static_cast<double>(z.cols());
      for (std::size_t i = 0; i < n; ++i) {
        double share = 0.0;
        for (std::size_t d = 0; d < z.cols(); ++d) {
          if (colsum[d] != 0.0) share += z(i, d) / colsum[d];
        }
        r.phi[i] = share * per_dim;
      }
      break;
    }
    case ValueKind::kVar: {
      const double mean = PairwiseSum(g) / nd;
      for (std::size_t i = 0; i < n; ++i) r.phi[i] = g[i] * (g[i] - mean) / nd;
      break;
    }
    case ValueKind::kGini: {
      const auto rank = detail::MidRanks(g, &r.rank_ties);
      for (std::size_t i = 0; i < n; ++i) {
        r.phi[i] = g[i] * (2.0 * rank[i] - nd - 1.0) / (nd * nd);
      }
      break;
    }
    default:
      break;
  }
  return r;
}

enum class PathKind { kLinear, kPermuted };

namespace detail {

// K-point midpoint estimate along z0 + tau (z - z0), all agents at once.
inline AttributionResult MidpointLinear(const ValueFunction& f,
                                        const FeatureMatrix& z,
                                        const FeatureMatrix& z0, int K,
                                        AgentIndex idx) {
  const std::size_t n = z.rows();
  const std::size_t dims = z.cols();
  FeatureMatrix delta(n, dims);
  for (std::size_t k = 0; k < delta.values().size(); ++k) {
    delta.values()[k] = z.values()[k] - z0.values()[k];
  }
  FeatureMatrix acc(n, dims, 0.0);
  FeatureMatrix x(n, dims);
  AttributionResult r;
  for (int k = 1; k <= K; ++k) {
    const double tau = (static_cast<double>(k) - 0.5) / static_cast<double>(K);
    for (std::size_t e = 0; e < x.values().size(); ++e) {
      x.values()[e] = z0.values()[e] + tau * delta.values()[e];
    }
    const auto gr = f.Gradient(x, idx);
    r.rank_ties = r.rank_ties || gr.rank_ties;
    for (std::size_t e = 0; e < acc.values().size(); ++e) {
      acc.values()[e] += gr.grad.values()[e];
    }
  }
  r.phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) s += delta(i, d) * acc(i, d);
    r.phi[i] = s / static_cast<double>(K);
  }
  return r;
}

// Agents faded in one at a time in a seeded order; each leg uses K midpoints.
inline AttributionResult MidpointPermuted(const ValueFunction& f,
                                          const FeatureMatrix& z,
                                          const FeatureMatrix& z0, int K,
                                          std::uint64_t seed, AgentIndex idx) {
  const std::size_t n = z.rows();
  const std::size_t dims = z.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FeatureMatrix x = z0;
  AttributionResult r;
  r.phi.assign(n, 0.0);
  for (std::size_t agent : order) {
    std::vector<double> acc(dims, 0.0);
    for (int k = 1; k <= K; ++k) {
      const double tau =
          (static_cast<double>(k) - 0.5) / static_cast<double>(K);
      for (std::size_t d = 0; d < dims; ++d) {
        x(agent, d) = z0(agent, d) + tau * (z(agent, d) - z0(agent, d));
      }
      const auto gr = f.Gradient(x, idx);
      r.rank_ties = r.rank_ties || gr.rank_ties;
      for (std::size_t d = 0; d < dims; ++d) acc[d] += gr.grad(agent, d);
    }
    double s = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      s += (z(agent, d) - z0(agent, d)) * acc[d];
      x(agent, d) = z(agent, d);
    }
    r.phi[agent] = s / static_cast<double>(K);
  }
  return r;
}

}  // namespace detail

// Midpoint path integral against an explicit n x D baseline matrix.
inline AttributionResult AttributePathIntegral(const ValueFunction& f,
                                               const FeatureMatrix& z,
                                               const FeatureMatrix& z0, int K,
                                               PathKind path = PathKind::kLinear,
                                               std::uint64_t seed = 0,
                                               AgentIndex idx = {}) {
  Require(K >= 1, "path integral: K must be >= 1");
  Require(z0.rows() == z.rows() && z0.cols() == z.cols(),
          "path integral: baseline shape must match features");
  AttributionResult r = path == PathKind::kLinear
                            ? detail::MidpointLinear(f, z, z0, K, idx)
                            : detail::MidpointPermuted(f, z, z0, K, seed, idx);
  r.delta_v = f.Evaluate(z, idx) - f.Evaluate(z0, idx);
  r.method = path == PathKind::kLinear ? AttributionMethod::Midpoint(K)
                                       : AttributionMethod::PermutedPath(K, seed);
  r.baseline = z0;
  return r;
}

inline AttributionResult AttributePathIntegral(const ValueFunction& f,
                                               const FeatureMatrix& z,
                                               const BaselineSpec& baseline,
                                               int K,
                                               PathKind path = PathKind::kLinear,
                                               std::uint64_t seed = 0,
                                               AgentIndex idx = {}) {
  Require(K >= 1, "path integral: K must be >= 1");
  return AttributePathIntegral(f, z, ResolveBaseline(baseline, z), K, path,
                               seed, idx);
}

inline AttributionResult Attribute(const ValueFunction& f,
                                   const FeatureMatrix& z,
                                   const AttributionMethod& method,
                                   const BaselineSpec& baseline = {},
                                   AgentIndex idx = {}) {
  switch (method.kind) {
    case MethodKind::kAnalytic:
      return AttributeAnalytic(f, z, baseline);
    case MethodKind::kMidpoint:
      return AttributePathIntegral(f, z, baseline, method.K, PathKind::kLinear,
                                   0, idx);
    case MethodKind::kPermutedPath:
      return AttributePathIntegral(f, z, baseline, method.K,
                                   PathKind::kPermuted, method.seed, idx);
  }
  return {};
}

inline constexpr double kDegenerateTolerance = 1e-12;

inline AttributionResult Normalize(AttributionResult r) {
  if (!(std::abs(r.delta_v) > kDegenerateTolerance)) {
    Fail(ErrorKind::kDegenerate,
         "degenerate macro change: |delta_v| <= 1e-12, shares undefined");
  }
  std::vector<double> shares(r.phi.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    shares[i] = r.phi[i] / r.delta_v;
  }
  r.normalized = std::move(shares);
  return r;
}

// ---------------------------------------------------------------------------
// Temporal attribution

struct TemporalAttribution {
  std::size_t n_agents = 0;
  std::size_t n_steps = 0;
  std::vector<AttributionResult> steps;  // one per step

  double phi(std::size_t agent, std::size_t step) const {
    return steps[step].phi[agent];
  }

  // Phi_i = sum_t phi_{i,t}
  std::vector<double> AgentTotals() const {
    std::vector<double> out(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
      out[i] = PairwiseSumOf(0, n_steps,
                             [&](std::size_t t) { return steps[t].phi[i]; });
    }
    return out;
  }

  // Phi_t = sum_i phi_{i,t}
  std::vector<double> StepTotals() const {
    std::vector<double> out(n_steps);
    for (std::size_t t = 0; t < n_steps; ++t) out[t] = PairwiseSum(steps[t].phi);
    return out;
  }
};

inline FeatureMatrix ResolveTemporalBaseline(const BaselineSpec& spec,
                                             const FeaturePanel& panel,
                                             std::size_t step) {
  const std::size_t n = panel.n_agents();
  const std::size_t dims = panel.n_dims();
  switch (spec.kind) {
    case BaselineKind::kFirstStep:
      return panel.Step(0);
    case BaselineKind::kPopulationMean: {
      std::vector<double> mean(dims);
      const std::size_t rows = n * panel.n_steps();
      for (std::size_t d = 0; d < dims; ++d) {
        mean[d] = PairwiseSumOf(0, rows, [&](std::size_t r) {
                    return panel.values()[r * dims + d];
                  }) / static_cast<double>(rows);
      }
      return FeatureMatrix::Broadcast(n, mean);
    }
    default:
      return ResolveBaseline(spec, panel.Step(step));
  }
}

// Each step is attributed independently on its own slice.
inline TemporalAttribution AttributeTemporal(const ValueFunction& f,
                                             const FeaturePanel& panel,
                                             const BaselineSpec& baseline,
                                             const AttributionMethod& method,
                                             unsigned threads = 1) {
  if (method.kind == MethodKind::kAnalytic) {
    Require(baseline.kind == BaselineKind::kZero,
            "closed forms need the zero baseline; use --method midpoint");
  }
  TemporalAttribution out;
  out.n_agents = panel.n_agents();
  out.n_steps = panel.n_steps();
  out.steps.resize(panel.n_steps());
  const unsigned workers = f.ThreadSafe() ? threads : 1;
  ParallelFor(panel.n_steps(), workers, [&](std::size_t t) {
    const FeatureMatrix z = panel.Step(t);
    if (method.kind == MethodKind::kAnalytic) {
      out.steps[t] = AttributeAnalytic(f, z);
    } else {
      const FeatureMatrix z0 = ResolveTemporalBaseline(baseline, panel, t);
      out.steps[t] = AttributePathIntegral(
          f, z, z0, method.K,
          method.kind == MethodKind::kMidpoint ? PathKind::kLinear
                                               : PathKind::kPermuted,
          method.seed);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Group shares

// R_G^S: summed normalized share of the members of `group` within S.
// `agents` maps result rows to panel agents (empty = identity).
inline double GroupShare(const AttributionResult& result,
                         const TierPartition& partition, std::size_t group,
                         std::span<const std::size_t> agents = {}) {
  Require(result.normalized.has_value(), "group share needs normalized shares");
  const auto& s = *result.normalized;
  Require(agents.empty() || agents.size() == s.size(),
          "group share: agent map size mismatch");
  return PairwiseSumOf(0, s.size(), [&](std::size_t r) {
    const std::size_t a = agents.empty() ? r : agents[r];
    return partition.labels.at(a) == group ? s[r] : 0.0;
  });
}

inline std::vector<double> GroupShares(const AttributionResult& result,
                                       const TierPartition& partition,
                                       std::span<const std::size_t> agents = {}) {
  std::vector<double> out(partition.n_groups());
  for (std::size_t g = 0; g < out.size(); ++g) {
    out[g] = GroupShare(result, partition, g, agents);
  }
  return out;
}

}  // namespace asattr
