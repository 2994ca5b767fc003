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

// Experiment harness: subset sampling, the cross-scale flip study, deletion
// faithfulness, quadrature sweeps and the wall-clock benchmark.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asattr/attribution.hpp"
#include "asattr/baselines.hpp"
#include "asattr/core.hpp"
#include "asattr/panel.hpp"
#include "asattr/ranks.hpp"
#include "asattr/scalingbias.hpp"
#include "asattr/valuefn.hpp"

namespace asattr {

// ---------------------------------------------------------------------------
// Subset sampling

enum class SubsetProtocol {
  kBiasVisibility,
  kBiasTopicXFollow,
  kBiasTopicTop,
  kRandom,
};

inline std::string_view ToString(SubsetProtocol p) {
  switch (p) {
    case SubsetProtocol::kBiasVisibility: return "bias_visibility";
    case SubsetProtocol::kBiasTopicXFollow: return "bias_topic_x_follow";
    case SubsetProtocol::kBiasTopicTop: return "bias_topic_top";
    case SubsetProtocol::kRandom: return "random";
  }
  return "?";
}

inline SubsetProtocol ParseSubsetProtocol(std::string_view s) {
  for (SubsetProtocol p :
       {SubsetProtocol::kBiasVisibility, SubsetProtocol::kBiasTopicXFollow,
        SubsetProtocol::kBiasTopicTop, SubsetProtocol::kRandom}) {
    if (s == ToString(p)) return p;
  }
  Fail(ErrorKind::kUsage, "unknown protocol '" + std::string(s) + "'");
}

inline const std::vector<SubsetProtocol>& AllProtocols() {
  static const std::vector<SubsetProtocol> all = {
      SubsetProtocol::kBiasVisibility, SubsetProtocol::kBiasTopicXFollow,
      SubsetProtocol::kBiasTopicTop, SubsetProtocol::kRandom};
  return all;
}

struct SubsetOptions {
  double pool_fraction = 0.05;   // bias_visibility
  std::size_t pool_size = 5000;  // topic protocols
};

struct SubsetSpec {
  std::vector<std::size_t> indices;  // ascending
  SubsetProtocol protocol = SubsetProtocol::kRandom;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t pool = 0;  // pool size actually used (N for random)
};

namespace detail {

inline std::vector<double> Standardize(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = PairwiseSum(x) / n;
  const double var = PairwiseSumOf(0, x.size(), [&](std::size_t i) {
                       return (x[i] - mean) * (x[i] - mean);
                     }) / n;
  const double sd = std::sqrt(var);
  std::vector<double> out(x.size(), 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  }
  return out;
}

// Agent indices by descending score, ties by index.
inline std::vector<std::size_t> RankDescending(std::span<const double> score) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

}  // namespace detail

// Per-agent score used to build the pool of a biased protocol.
inline std::vector<double> ProtocolScores(const AgentMetrics& m,
                                          SubsetProtocol protocol) {
  const std::size_t n = m.size();
  std::vector<double> score(n, 0.0);
  switch (protocol) {
    case SubsetProtocol::kBiasVisibility: {
      std::vector<double> reach(n);
      std::vector<double> engage(n);
      for (std::size_t i = 0; i < n; ++i) {
        reach[i] = std::log1p(m.followers[i]);
        engage[i] = std::log1p(m.topic_posts[i] + m.replies_received[i]);
      }
      const auto zr = detail::Standardize(reach);
      const auto ze = detail::Standardize(engage);
      for (std::size_t i = 0; i < n; ++i) score[i] = zr[i] + ze[i];
      break;
    }
    case SubsetProtocol::kBiasTopicXFollow:
      for (std::size_t i = 0; i < n; ++i) {
        score[i] = std::log1p(m.topic_posts[i] + m.replies_received[i]) *
                   std::log1p(m.followers[i]);
      }
      break;
    case SubsetProtocol::kBiasTopicTop:
      for (std::size_t i = 0; i < n; ++i) score[i] = m.topic_posts[i];
      break;
    case SubsetProtocol::kRandom:
      break;
  }
  return score;
}

inline SubsetSpec SampleSubset(const AgentMetrics& metrics,
                               SubsetProtocol protocol, std::size_t n,
                               std::uint64_t seed,
                               const SubsetOptions& opt = {}) {
  const std::size_t total = metrics.size();
  Require(n >= 1, "subset size must be >= 1");
  if (n > total) {
    Fail(ErrorKind::kUsage, "subset size " + std::to_string(n) +
                                " exceeds population " + std::to_string(total));
  }
  SubsetSpec spec;
  spec.protocol = protocol;
  spec.n = n;
  spec.seed = seed;
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> ranked;
  std::size_t pool = total;
  if (protocol == SubsetProtocol::kRandom) {
    ranked.resize(total);
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  } else {
    ranked = detail::RankDescending(ProtocolScores(metrics, protocol));
    if (protocol == SubsetProtocol::kBiasVisibility) {
      Require(opt.pool_fraction > 0.0 && opt.pool_fraction <= 1.0,
              "pool_fraction must lie in (0, 1]");
      pool = static_cast<std::size_t>(
          std::ceil(opt.pool_fraction * static_cast<double>(total) - 1e-9));
    } else {
      Require(opt.pool_size >= 1, "pool_size must be >= 1");
      pool = opt.pool_size;
    }
    pool = std::clamp<std::size_t>(pool, 1, total);
  }
  spec.pool = pool;

  std::vector<std::size_t> head(ranked.begin(),
                                ranked.begin() + static_cast<std::ptrdiff_t>(pool));
  if (n <= pool) {
    std::shuffle(head.begin(), head.end(), rng);
    head.resize(n);
    spec.indices = std::move(head);
  } else {
    // Whole pool plus a uniform draw from the complement.
    std::vector<std::size_t> rest(ranked.begin() + static_cast<std::ptrdiff_t>(pool),
                                  ranked.end());
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    rest.resize(n - pool);
    spec.indices = std::move(head);
    spec.indices.insert(spec.indices.end(), rest.begin(), rest.end());
  }
  std::sort(spec.indices.begin(), spec.indices.end());
  return spec;
}

inline std::size_t CountInGroup(std::span<const std::size_t> indices,
                                const TierPartition& partition,
                                std::size_t group) {
  return static_cast<std::size_t>(
      std::count_if(indices.begin(), indices.end(), [&](std::size_t a) {
        return partition.labels.at(a) == group;
      }));
}

// ---------------------------------------------------------------------------
// Flip study

struct FlipConfig {
  std::vector<SubsetProtocol> protocols = AllProtocols();
  std::vector<ValueFunction> functions;
  std::vector<std::size_t> sizes = {100};
  std::vector<std::uint64_t> seeds = {0};
  SubsetOptions subset;
  // Kinds without a closed form fall back to the midpoint rule with this K.
  AttributionMethod method = AttributionMethod::Analytic();
  unsigned threads = 1;
};

struct FlipCell {
  SubsetProtocol protocol = SubsetProtocol::kRandom;
  std::string f_name;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;
  std::vector<double> shares;  // per group
  std::size_t top_members = 0; // |S ∩ group 0|
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double c_star = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
};

struct FlipAggregate {
  SubsetProtocol protocol = SubsetProtocol::kRandom;
  std::string f_name;
  std::size_t n = 0;
  std::size_t n_valid = 0;
  std::size_t n_degenerate = 0;
  std::vector<double> mean_shares;
  std::vector<double> std_shares;
  std::vector<double> full_shares;
  double mean_epsilon = std::numeric_limits<double>::quiet_NaN();
  double mean_spearman = std::numeric_limits<double>::quiet_NaN();
  double mean_top_members = 0.0;
};

struct FlipReport {
  std::vector<std::string> group_names;
  std::vector<std::string> f_names;
  std::vector<std::vector<double>> full_shares;  // per function
  std::vector<FlipCell> cells;
  std::vector<FlipAggregate> aggregates;
};

inline AttributionResult AttributeWith(const ValueFunction& f,
                                       const FeatureMatrix& z,
                                       const AttributionMethod& method,
                                       AgentIndex idx = {}) {
  if (method.kind == MethodKind::kAnalytic && f.HasAnalyticAttribution()) {
    return AttributeAnalytic(f, z);
  }
  const int K = method.K > 0 ? method.K : kDefaultK;
  return AttributePathIntegral(f, z, BaselineSpec::Zero(), K, PathKind::kLinear,
                               0, idx);
}

// `z` holds one feature row per agent of the full population.
inline FlipReport FlipStudy(const FeatureMatrix& z, const AgentMetrics& metrics,
                            const TierPartition& partition,
                            const FlipConfig& cfg) {
  Require(!cfg.functions.empty(), "flip study needs at least one function");
  Require(z.rows() == metrics.size() && z.rows() == partition.labels.size(),
          "flip study: population size mismatch");
  FlipReport report;
  report.group_names = partition.group_names;
  std::vector<std::vector<double>> full_norm;
  for (const auto& f : cfg.functions) {
    report.f_names.push_back(f.name());
    auto full = Normalize(AttributeWith(f, z, cfg.method));
    report.full_shares.push_back(GroupShares(full, partition));
    full_norm.push_back(std::move(*full.normalized));
  }

  struct Job {
    std::size_t p, s, seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < cfg.protocols.size(); ++p) {
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
      for (std::size_t k = 0; k < cfg.seeds.size(); ++k) jobs.push_back({p, s, k});
    }
  }
  const std::size_t nf = cfg.functions.size();
  report.cells.resize(jobs.size() * nf);
  const bool safe = std::all_of(cfg.functions.begin(), cfg.functions.end(),
                                [](const auto& f) { return f.ThreadSafe(); });
  ParallelFor(jobs.size(), safe ? cfg.threads : 1, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto spec = SampleSubset(metrics, cfg.protocols[job.p],
                                   cfg.sizes[job.s], cfg.seeds[job.seed],
                                   cfg.subset);
    const FeatureMatrix zs = z.SelectRows(spec.indices);
    for (std::size_t fi = 0; fi < nf; ++fi) {
      FlipCell& cell = report.cells[j * nf + fi];
      cell.protocol = spec.protocol;
      cell.f_name = report.f_names[fi];
      cell.n = spec.n;
      cell.seed = spec.seed;
      cell.top_members = CountInGroup(spec.indices, partition, 0);
      AttributionResult r = AttributeWith(cfg.functions[fi], zs, cfg.method,
                                          spec.indices);
      if (!(std::abs(r.delta_v) > kDegenerateTolerance)) {
        cell.degenerate = true;
        continue;
      }
      r = Normalize(std::move(r));
      cell.shares = GroupShares(r, partition, spec.indices);
      if (spec.n >= 2) {
        std::vector<double> at_s(spec.n);
        for (std::size_t k = 0; k < spec.n; ++k) {
          at_s[k] = full_norm[fi][spec.indices[k]];
        }
        try {
          const auto rs = OptimalRescale(*r.normalized, at_s);
          cell.epsilon = rs.epsilon;
          cell.c_star = rs.c_star;
          cell.spearman = rs.spearman;
        } catch (const Error&) {
          // zero-norm restriction: leave the rescale fields empty
        }
      }
    }
  });

  // Aggregate in (protocol, size, function) order, seeds folded.
  const std::size_t groups = partition.n_groups();
  for (std::size_t p = 0; p < cfg.protocols.size(); ++p) {
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
      for (std::size_t fi = 0; fi < nf; ++fi) {
        FlipAggregate agg;
        agg.protocol = cfg.protocols[p];
        agg.f_name = report.f_names[fi];
        agg.n = cfg.sizes[s];
        agg.full_shares = report.full_shares[fi];
        std::vector<std::vector<double>> per_group(groups);
        std::vector<double> eps;
        std::vector<double> rho;
        double members = 0.0;
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
          const std::size_t j =
              (p * cfg.sizes.size() + s) * cfg.seeds.size() + k;
          const FlipCell& cell = report.cells[j * nf + fi];
          members += static_cast<double>(cell.top_members);
          if (cell.degenerate) {
            ++agg.n_degenerate;
            continue;
          }
          ++agg.n_valid;
          for (std::size_t g = 0; g < groups; ++g) {
            per_group[g].push_back(cell.shares[g]);
          }
          if (std::isfinite(cell.epsilon)) eps.push_back(cell.epsilon);
          if (std::isfinite(cell.spearman)) rho.push_back(cell.spearman);
        }
        agg.mean_top_members = members / static_cast<double>(cfg.seeds.size());
        for (std::size_t g = 0; g < groups; ++g) {
          const auto& v = per_group[g];
          const double nv = static_cast<double>(v.size());
          double mean = v.empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : PairwiseSum(v) / nv;
          double sd = 0.0;
          if (v.size() > 1) {
            for (double x : v) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / (nv - 1.0));
          }
          agg.mean_shares.push_back(mean);
          agg.std_shares.push_back(sd);
        }
        if (!eps.empty()) {
          agg.mean_epsilon = PairwiseSum(eps) / static_cast<double>(eps.size());
        }
        if (!rho.empty()) {
          agg.mean_spearman = PairwiseSum(rho) / static_cast<double>(rho.size());
        }
        report.aggregates.push_back(std::move(agg));
      }
    }
  }
  return report;
}

// Mean |S ∩ group 0| per protocol over seeds.
struct DoseResponseRow {
  SubsetProtocol protocol = SubsetProtocol::kRandom;
  double mean_top_members = 0.0;
  double std_top_members = 0.0;
};

inline std::vector<DoseResponseRow> DoseResponse(
    const AgentMetrics& metrics, const TierPartition& partition,
    std::span<const SubsetProtocol> protocols, std::size_t n,
    std::span<const std::uint64_t> seeds, const SubsetOptions& opt = {}) {
  Require(!seeds.empty(), "dose-response needs seeds");
  std::vector<DoseResponseRow> rows;
  for (SubsetProtocol p : protocols) {
    std::vector<double> counts;
    for (std::uint64_t seed : seeds) {
      const auto spec = SampleSubset(metrics, p, n, seed, opt);
      counts.push_back(static_cast<double>(CountInGroup(spec.indices, partition, 0)));
    }
    DoseResponseRow row;
    row.protocol = p;
    const double k = static_cast<double>(counts.size());
    row.mean_top_members = PairwiseSum(counts) / k;
    if (counts.size() > 1) {
      double ss = 0.0;
      for (double c : counts) ss += (c - row.mean_top_members) * (c - row.mean_top_members);
      row.std_top_members = std::sqrt(ss / (k - 1.0));
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Deletion faithfulness

struct DeletionResult {
  std::size_t target_step = 0;
  std::vector<double> drops;  // drops[k-1] after removing the top k
  double auc = 0.0;
};

// argmax_t f(z_t) over the second half of the steps (t >= ceil(T/2), 1-based).
inline std::size_t DeletionTargetStep(const ValueFunction& f,
                                      std::span<const FeatureMatrix> steps) {
  Require(!steps.empty(), "deletion: no steps");
  const std::size_t T = steps.size();
  const std::size_t first = (T + 1) / 2 - 1;
  std::size_t best = first;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t t = first; t < T; ++t) {
    const double v = f.Evaluate(steps[t]);
    if (v > best_v) {
      best_v = v;
      best = t;
    }
  }
  return best;
}

// Agents by descending attribution, ties by index.
inline std::vector<std::size_t> RankByAttribution(std::span<const double> phi) {
  return detail::RankDescending(phi);
}

// Overwrites the first k agents of `ranking` with `action` at step t and
// records (f(z) - f(z after)) / (f(z) - f(all at action)).
inline DeletionResult DeletionFaithfulnessAt(const ValueFunction& f,
                                             const FeatureMatrix& z,
                                             std::span<const std::size_t> ranking,
                                             std::size_t k_max,
                                             std::span<const double> action = {}) {
  const std::size_t n = z.rows();
  Require(k_max >= 1 && k_max <= n, "deletion: need 1 <= k_max <= n");
  Require(ranking.size() >= k_max, "deletion: ranking shorter than k_max");
  std::vector<double> row(z.cols(), 0.0);
  if (!action.empty()) {
    Require(action.size() == z.cols(), "deletion: action must have length D");
    row.assign(action.begin(), action.end());
  }
  const double before = f.Evaluate(z);
  const double floor_v = f.Evaluate(FeatureMatrix::Broadcast(n, row));
  const double span = before - floor_v;
  if (!(std::abs(span) > kDegenerateTolerance)) {
    Fail(ErrorKind::kDegenerate, "deletion: f(z) equals f at the baseline action");
  }
  DeletionResult out;
  FeatureMatrix x = z;
  for (std::size_t k = 0; k < k_max; ++k) {
    Require(ranking[k] < n, "deletion: ranking index out of range");
    std::copy(row.begin(), row.end(), x.row(ranking[k]).begin());
    out.drops.push_back((before - f.Evaluate(x)) / span);
  }
  out.auc = PairwiseSum(out.drops) / static_cast<double>(k_max);
  return out;
}

// Uses the attribution at the target step to rank agents.
inline DeletionResult DeletionFaithfulness(const ValueFunction& f,
                                           std::span<const FeatureMatrix> steps,
                                           std::size_t k_max,
                                           std::span<const double> action = {},
                                           int K = kDefaultK) {
  const std::size_t t = DeletionTargetStep(f, steps);
  const auto r = AttributeWith(f, steps[t], AttributionMethod::Midpoint(K));
  const auto ranking = RankByAttribution(r.phi);
  auto out = DeletionFaithfulnessAt(f, steps[t], ranking, k_max, action);
  out.target_step = t;
  return out;
}

// Mean AUC of `trials` uniformly random rankings at the target step.
inline double RandomDeletionAuc(const ValueFunction& f,
                                std::span<const FeatureMatrix> steps,
                                std::size_t k_max, std::size_t trials,
                                std::uint64_t seed,
                                std::span<const double> action = {}) {
  Require(trials >= 1, "random deletion needs trials >= 1");
  const std::size_t t = DeletionTargetStep(f, steps);
  std::vector<std::size_t> order(steps[t].rows());
  double total = 0.0;
  for (std::size_t r = 0; r < trials; ++r) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(DeriveSeed(seed, r));
    std::shuffle(order.begin(), order.end(), rng);
    total += DeletionFaithfulnessAt(f, steps[t], order, k_max, action).auc;
  }
  return total / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// Quadrature sweep

struct KConvergenceRow {
  int K = 0;
  double rel_l1 = 0.0;
  double seconds = 0.0;
};

inline double RelativeL1(std::span<const double> estimate,
                         std::span<const double> reference) {
  Require(estimate.size() == reference.size(), "relative L1: size mismatch");
  const double num = PairwiseSumOf(0, estimate.size(), [&](std::size_t i) {
    return std::abs(estimate[i] - reference[i]);
  });
  const double den = PairwiseSumOf(0, reference.size(), [&](std::size_t i) {
    return std::abs(reference[i]);
  });
  if (den == 0.0) Fail(ErrorKind::kDegenerate, "relative L1: zero reference");
  return num / den;
}

// Error of the K-point midpoint estimate against the closed form, or against
// K = k_ref when f has none.
inline std::vector<KConvergenceRow> KConvergenceSweep(const ValueFunction& f,
                                                      const FeatureMatrix& z,
                                                      std::span<const int> ks,
                                                      int k_ref = 300) {
  const auto reference = f.HasAnalyticAttribution()
                             ? AttributeAnalytic(f, z).phi
                             : AttributePathIntegral(f, z, BaselineSpec::Zero(), k_ref).phi;
  std::vector<KConvergenceRow> rows;
  for (int K : ks) {
    const auto start = std::chrono::steady_clock::now();
    const auto est = AttributePathIntegral(f, z, BaselineSpec::Zero(), K);
    const auto stop = std::chrono::steady_clock::now();
    rows.push_back({K, RelativeL1(est.phi, reference),
                    std::chrono::duration<double>(stop - start).count()});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Temporal attribution mass by anchor percentile bin

// T x bins matrix: row t holds sum of phi_{i,t} over the agents of each bin,
// bins cut by descending score rank (bin 0 = highest scores).
inline FeatureMatrix AttributionMassByBin(const TemporalAttribution& attr,
                                          std::span<const double> scores,
                                          std::size_t bins) {
  Require(bins >= 1, "mass by bin needs bins >= 1");
  Require(scores.size() == attr.n_agents, "mass by bin: score size mismatch");
  const auto order = detail::RankDescending(scores);
  const std::size_t n = attr.n_agents;
  std::vector<std::size_t> bin_of(n);
  for (std::size_t r = 0; r < n; ++r) bin_of[order[r]] = r * bins / n;
  FeatureMatrix mass(attr.n_steps, bins, 0.0);
  for (std::size_t t = 0; t < attr.n_steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) mass(t, bin_of[i]) += attr.phi(i, t);
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Wall-clock benchmark

enum class BenchMethod {
  kOursAnalytic,
  kOursMidpoint,
  kLoo,
  kSampledShapley,
  kSampledBanzhaf,
  kExactShapley,
  kExactBanzhaf,
};

inline std::string_view ToString(BenchMethod m) {
  switch (m) {
    case BenchMethod::kOursAnalytic: return "ours_analytic";
    case BenchMethod::kOursMidpoint: return "ours_midpoint";
    case BenchMethod::kLoo: return "loo";
    case BenchMethod::kSampledShapley: return "sampled_shapley";
    case BenchMethod::kSampledBanzhaf: return "sampled_banzhaf";
    case BenchMethod::kExactShapley: return "exact_shapley";
    case BenchMethod::kExactBanzhaf: return "exact_banzhaf";
  }
  return "?";
}

inline BenchMethod ParseBenchMethod(std::string_view s) {
  for (BenchMethod m :
       {BenchMethod::kOursAnalytic, BenchMethod::kOursMidpoint, BenchMethod::kLoo,
        BenchMethod::kSampledShapley, BenchMethod::kSampledBanzhaf,
        BenchMethod::kExactShapley, BenchMethod::kExactBanzhaf}) {
    if (s == ToString(m)) return m;
  }
  Fail(ErrorKind::kUsage, "unknown bench method '" + std::string(s) + "'");
}

struct BenchConfig {
  ValueKind f = ValueKind::kHeat;
  std::vector<std::size_t> sizes = {10, 100, 1000, 10000, 100000, 1000000};
  std::vector<BenchMethod> methods = {BenchMethod::kOursAnalytic};
  std::size_t m_samples = 1000;
  int repeats = 3;
  int K = kDefaultK;
  std::size_t dims = 3;
  std::uint64_t seed = 0;
  // Cells whose estimated work (row operations) exceeds this are skipped.
  double max_work = 4e9;
};

struct BenchRow {
  BenchMethod method = BenchMethod::kOursAnalytic;
  std::size_t n = 0;
  std::string status;  // ok | infeasible | skipped
  double seconds = std::numeric_limits<double>::quiet_NaN();
};

// Median over `repeats` of the per-call time; calls shorter than 1 ms are
// looped until the batch takes at least that long.
template <typename Fn>
double MedianSeconds(Fn&& fn, int repeats) {
  Require(repeats >= 1, "timing needs repeats >= 1");
  using Clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  std::vector<double> samples;
  for (int r = 0; r < repeats; ++r) {
    std::size_t iters = 1;
    while (true) {
      const auto start = Clock::now();
      for (std::size_t k = 0; k < iters; ++k) sink = sink + fn();
      const double elapsed =
          std::chrono::duration<double>(Clock::now() - start).count();
      if (elapsed >= 1e-3 || iters >= (std::size_t{1} << 24)) {
        samples.push_back(elapsed / static_cast<double>(iters));
        break;
      }
      iters *= 4;
    }
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

inline double EstimateBenchWork(BenchMethod m, std::size_t n, std::size_t dims,
                                std::size_t samples, int K) {
  const double nd = static_cast<double>(n);
  const double d = static_cast<double>(dims);
  switch (m) {
    case BenchMethod::kOursAnalytic: return nd * d;
    case BenchMethod::kOursMidpoint: return static_cast<double>(K) * nd * d;
    case BenchMethod::kLoo: return nd * d;
    case BenchMethod::kSampledShapley: return static_cast<double>(samples) * nd * d;
    case BenchMethod::kSampledBanzhaf:
      return static_cast<double>(samples) * (nd + 1.0) * nd * d;
    case BenchMethod::kExactShapley:
    case BenchMethod::kExactBanzhaf:
      return std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(n, 1000))) * nd;
  }
  return 0.0;
}

inline std::vector<BenchRow> BenchScaling(const BenchConfig& cfg) {
  Require(std::is_sorted(cfg.sizes.begin(), cfg.sizes.end()),
          "bench sizes must be ascending");
  const ValueFunction f = ValueFunction::FromKind(cfg.f);
  std::vector<BenchRow> rows;
  for (std::size_t n : cfg.sizes) {
    SyntheticPanelSpec spec;
    spec.n_agents = n;
    spec.n_dims = cfg.dims;
    spec.feature_law = FeatureLaw::kAbsGaussian;
    spec.seed = DeriveSeed(cfg.seed, n);
    const FeatureMatrix z = GenerateSynthetic(spec).Step(0);
    for (BenchMethod m : cfg.methods) {
      BenchRow row;
      row.method = m;
      row.n = n;
      const bool exact =
          m == BenchMethod::kExactShapley || m == BenchMethod::kExactBanzhaf;
      if (exact && n > kMaxExactAgents) {
        row.status = "infeasible";
        rows.push_back(row);
        continue;
      }
      if (EstimateBenchWork(m, n, cfg.dims, cfg.m_samples, cfg.K) > cfg.max_work) {
        row.status = "skipped";
        rows.push_back(row);
        continue;
      }
      if (m == BenchMethod::kLoo && n < 2) {
        row.status = "skipped";
        rows.push_back(row);
        continue;
      }
      const CoalitionGame game(f, z);
      auto first = [](const std::vector<double>& v) { return v.empty() ? 0.0 : v[0]; };
      switch (m) {
        case BenchMethod::kOursAnalytic:
          row.seconds = MedianSeconds([&] { return first(AttributeAnalytic(f, z).phi); },
                                      cfg.repeats);
          break;
        case BenchMethod::kOursMidpoint:
          row.seconds = MedianSeconds(
              [&] {
                return first(AttributePathIntegral(f, z, BaselineSpec::Zero(), cfg.K).phi);
              },
              cfg.repeats);
          break;
        case BenchMethod::kLoo:
          row.seconds =
              MedianSeconds([&] { return first(LeaveOneOut(game).phi); }, cfg.repeats);
          break;
        case BenchMethod::kSampledShapley:
          row.seconds = MedianSeconds(
              [&] { return first(SampledShapley(game, cfg.m_samples, cfg.seed).phi); },
              cfg.repeats);
          break;
        case BenchMethod::kSampledBanzhaf:
          row.seconds = MedianSeconds(
              [&] { return first(SampledBanzhaf(game, cfg.m_samples, cfg.seed).phi); },
              cfg.repeats);
          break;
        case BenchMethod::kExactShapley:
          row.seconds =
              MedianSeconds([&] { return first(ExactShapley(game).phi); }, cfg.repeats);
          break;
        case BenchMethod::kExactBanzhaf:
          row.seconds =
              MedianSeconds([&] { return first(ExactBanzhaf(game).phi); }, cfg.repeats);
          break;
      }
      row.status = "ok";
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace asattr
