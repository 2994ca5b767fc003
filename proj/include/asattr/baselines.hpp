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

// Coalition-based reference attributions over the game v(C) induced by a
// value function and a feature configuration.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "asattr/core.hpp"
#include "asattr/valuefn.hpp"

namespace asattr {

inline constexpr std::size_t kMaxExactAgents = 20;

enum class CoalitionSemantics {
  kRestrict,  // agents outside C are absent; f sees |C| rows
  kPin,       // agents outside C sit at their baseline row; f sees n rows
};

class CoalitionGame {
 public:
  // `baseline` is used by kPin only; empty means all zeros.
  CoalitionGame(ValueFunction f, FeatureMatrix z,
                CoalitionSemantics semantics = CoalitionSemantics::kRestrict,
                FeatureMatrix baseline = {})
      : f_(std::move(f)),
        z_(std::move(z)),
        z0_(baseline.empty() ? FeatureMatrix(z_.rows(), z_.cols(), 0.0)
                             : std::move(baseline)),
        semantics_(semantics) {
    Require(z_.rows() >= 1, "coalition game needs at least one agent");
    Require(z0_.rows() == z_.rows() && z0_.cols() == z_.cols(),
            "coalition game: baseline shape mismatch");
  }

  std::size_t n() const noexcept { return z_.rows(); }
  const ValueFunction& f() const noexcept { return f_; }
  const FeatureMatrix& features() const noexcept { return z_; }
  CoalitionSemantics semantics() const noexcept { return semantics_; }

  // v(C) for C given as sorted-or-not agent indices without duplicates.
  double Value(std::span<const std::size_t> members) const {
    if (semantics_ == CoalitionSemantics::kRestrict) {
      if (members.empty()) return f_.EmptyValue();
      return f_.Evaluate(z_.SelectRows(members), members);
    }
    FeatureMatrix x = z0_;
    for (std::size_t a : members) {
      std::copy(z_.row(a).begin(), z_.row(a).end(), x.row(a).begin());
    }
    return f_.Evaluate(x);
  }

  double GrandValue() const {
    std::vector<std::size_t> all(n());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return Value(all);
  }

  double EmptyValue() const { return Value(std::span<const std::size_t>{}); }

  // Builds coalitions one agent at a time. Built-in kinds under restrict
  // semantics update in O(D) (quadratic_cross: O(|C|)); everything else
  // re-evaluates.
  class Accumulator {
   public:
    explicit Accumulator(const CoalitionGame& game) : game_(game) { Reset(); }

    void Reset() {
      members_.clear();
      count_ = 0;
      sum_ = 0.0;
      mean_ = 0.0;
      m2_ = 0.0;
      diag_ = 0.0;
      cross_ = 0.0;
      colsum_.assign(game_.z_.cols(), 0.0);
      row_sums_.clear();
      value_ = game_.EmptyValue();
    }

    void Add(std::size_t agent) {
      const auto& f = game_.f_;
      const auto& z = game_.z_;
      const bool fast = game_.semantics_ == CoalitionSemantics::kRestrict;
      const auto row = z.row(agent);
      double g = 0.0;
      for (double v : row) g += v;
      ++count_;
      const double c = static_cast<double>(count_);
      if (!fast) {
        members_.push_back(agent);
        value_ = game_.Value(members_);
        return;
      }
      switch (f.kind()) {
        case ValueKind::kLin:
          sum_ += g;
          value_ = sum_ / c;
          return;
        case ValueKind::kHeat: {
          double h = 1.0;
          for (std::size_t d = 0; d < row.size(); ++d) {
            colsum_[d] += row[d];
            h *= colsum_[d] / c;
          }
          value_ = std::log1p(h);
          return;
        }
        case ValueKind::kVar: {
          const double delta = g - mean_;
          mean_ += delta / c;
          m2_ += delta * (g - mean_);
          value_ = m2_ / c;
          return;
        }
        case ValueKind::kAdditive:
        case ValueKind::kSoftplus: {
          const auto& w = f.weights();
          const auto wr = w.rows() == 1 ? w.row(0) : w.row(agent);
          for (std::size_t d = 0; d < row.size(); ++d) sum_ += wr[d] * row[d];
          value_ = f.kind() == ValueKind::kAdditive
                       ? sum_
                       : detail::Softplus(f.scale() * sum_) / f.scale();
          return;
        }
        case ValueKind::kQuadraticCross: {
          const auto& q = f.weights();
          const auto qr = q.rows() == 1 ? q.row(0) : q.row(agent);
          for (std::size_t d = 0; d < row.size(); ++d) {
            diag_ += qr[d] * row[d] * row[d];
          }
          for (std::size_t k = 0; k < members_.size(); ++k) {
            cross_ += f.coupling()(agent, members_[k]) * row_sums_[k] * g;
          }
          members_.push_back(agent);
          row_sums_.push_back(g);
          const double scale = f.inverse_n2() ? 1.0 / (c * c) : 1.0;
          value_ = scale * (diag_ + cross_);
          return;
        }
        default:
          members_.push_back(agent);
          value_ = game_.Value(members_);
          return;
      }
    }

    double value() const noexcept { return value_; }

   private:
    const CoalitionGame& game_;
    std::vector<std::size_t> members_;
    std::vector<double> row_sums_;
    std::vector<double> colsum_;
    std::size_t count_ = 0;
    double sum_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double diag_ = 0.0;
    double cross_ = 0.0;
    double value_ = 0.0;
  };

 private:
  ValueFunction f_;
  FeatureMatrix z_;
  FeatureMatrix z0_;
  CoalitionSemantics semantics_;
};

struct CoalitionEstimate {
  std::vector<double> phi;
  std::vector<double> std_error;  // zeros for exact methods
  std::size_t evaluations = 0;    // coalition values computed
};

namespace detail {

// v([n] \ {i}) for every i from running totals, for the kinds where removing
// one agent is a downdate. Returns false when no such form applies.
inline bool LeaveOneOutDowndate(const CoalitionGame& game,
                                std::vector<double>& without) {
  if (game.semantics() != CoalitionSemantics::kRestrict) return false;
  const auto& f = game.f();
  const auto& z = game.features();
  const std::size_t n = z.rows();
  const std::size_t dims = z.cols();
  const double rest = static_cast<double>(n - 1);
  const auto g = RowSums(z);
  without.resize(n);
  switch (f.kind()) {
    case ValueKind::kLin: {
      const double total = PairwiseSum(g);
      for (std::size_t i = 0; i < n; ++i) without[i] = (total - g[i]) / rest;
      return true;
    }
    case ValueKind::kHeat: {
      std::vector<double> colsum(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        colsum[d] = PairwiseSumOf(0, n, [&](std::size_t i) { return z(i, d); });
      }
      for (std::size_t i = 0; i < n; ++i) {
        double h = 1.0;
        for (std::size_t d = 0; d < dims; ++d) h *= (colsum[d] - z(i, d)) / rest;
        without[i] = std::log1p(h);
      }
      return true;
    }
    case ValueKind::kVar: {
      const double mean = PairwiseSum(g) / static_cast<double>(n);
      const double m2 = PairwiseSumOf(0, n, [&](std::size_t i) {
        return (g[i] - mean) * (g[i] - mean);
      });
      // Removing x from a sample with mean m and sum of squares M2 leaves
      // M2 - (x - m)^2 * n / (n - 1).
      const double nd = static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = g[i] - mean;
        without[i] = std::max(0.0, m2 - e * e * nd / rest) / rest;
      }
      return true;
    }
    case ValueKind::kAdditive:
    case ValueKind::kSoftplus: {
      const auto& w = f.weights();
      std::vector<double> contrib(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto wr = w.rows() == 1 ? w.row(0) : w.row(i);
        double s = 0.0;
        for (std::size_t d = 0; d < dims; ++d) s += wr[d] * z(i, d);
        contrib[i] = s;
      }
      const double total = PairwiseSum(contrib);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = total - contrib[i];
        without[i] = f.kind() == ValueKind::kAdditive
                         ? s
                         : Softplus(f.scale() * s) / f.scale();
      }
      return true;
    }
    default:
      return false;
  }
}

}  // namespace detail

inline CoalitionEstimate LeaveOneOut(const CoalitionGame& game) {
  const std::size_t n = game.n();
  Require(n >= 2, "leave-one-out needs n >= 2");
  CoalitionEstimate out;
  out.phi.resize(n);
  out.std_error.assign(n, 0.0);
  const double full = game.GrandValue();
  std::vector<double> without;
  if (detail::LeaveOneOutDowndate(game, without)) {
    for (std::size_t i = 0; i < n; ++i) out.phi[i] = full - without[i];
    out.evaluations = n + 1;
    return out;
  }
  std::vector<std::size_t> rest;
  rest.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    rest.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rest.push_back(j);
    }
    out.phi[i] = full - game.Value(rest);
  }
  out.evaluations = n + 1;
  return out;
}

namespace detail {

inline void GuardExact(std::size_t n, const char* what) {
  if (n > kMaxExactAgents) {
    Fail(ErrorKind::kInfeasible,
         std::string(what) + " infeasible: n = " + std::to_string(n) +
             " exceeds the exact-enumeration guard of " +
             std::to_string(kMaxExactAgents));
  }
}

// v over all 2^n coalitions, indexed by bitmask.
inline std::vector<double> AllCoalitionValues(const CoalitionGame& game) {
  const std::size_t n = game.n();
  std::vector<double> v(std::size_t{1} << n);
  std::vector<std::size_t> members;
  for (std::size_t mask = 0; mask < v.size(); ++mask) {
    members.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) members.push_back(i);
    }
    v[mask] = game.Value(members);
  }
  return v;
}

}  // namespace detail

inline CoalitionEstimate ExactShapley(const CoalitionGame& game) {
  const std::size_t n = game.n();
  detail::GuardExact(n, "exact Shapley");
  const auto v = detail::AllCoalitionValues(game);
  // weight(s) = s! (n-s-1)! / n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }
  CoalitionEstimate out;
  out.phi.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < v.size(); ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      acc += weight[s] * (v[mask | bit] - v[mask]);
    }
    out.phi[i] = acc;
  }
  out.evaluations = v.size();
  return out;
}

inline CoalitionEstimate ExactBanzhaf(const CoalitionGame& game) {
  const std::size_t n = game.n();
  detail::GuardExact(n, "exact Banzhaf");
  const auto v = detail::AllCoalitionValues(game);
  const double norm = std::ldexp(1.0, -static_cast<int>(n - 1));
  CoalitionEstimate out;
  out.phi.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < v.size(); ++mask) {
      if (!(mask & bit)) acc += v[mask | bit] - v[mask];
    }
    out.phi[i] = acc * norm;
  }
  out.evaluations = v.size();
  return out;
}

namespace detail {

// Samples are grouped in fixed blocks whose partial sums are combined in
// block order, so results do not depend on the thread count.
inline constexpr std::size_t kSampleBlock = 16;

struct MomentSums {
  std::vector<double> sum;
  std::vector<double> sum_sq;
};

inline CoalitionEstimate FinishMoments(const std::vector<MomentSums>& blocks,
                                       std::size_t n, std::size_t m) {
  CoalitionEstimate out;
  out.phi.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  std::vector<double> sq(n, 0.0);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < n; ++i) {
      out.phi[i] += b.sum[i];
      sq[i] += b.sum_sq[i];
    }
  }
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = out.phi[i] / md;
    out.phi[i] = mean;
    if (m > 1) {
      const double var = std::max(0.0, (sq[i] - md * mean * mean) / (md - 1.0));
      out.std_error[i] = std::sqrt(var / md);
    }
  }
  return out;
}

}  // namespace detail

// Permutation estimator; each permutation's marginals telescope to
// v([n]) - v(empty).
inline CoalitionEstimate SampledShapley(const CoalitionGame& game,
                                        std::size_t m, std::uint64_t seed,
                                        unsigned threads = 1) {
  Require(m >= 1, "sampled Shapley needs m >= 1");
  const std::size_t n = game.n();
  const std::size_t n_blocks = (m + detail::kSampleBlock - 1) / detail::kSampleBlock;
  std::vector<detail::MomentSums> blocks(n_blocks);
  const unsigned workers = game.f().ThreadSafe() ? threads : 1;
  ParallelFor(n_blocks, workers, [&](std::size_t b) {
    auto& out = blocks[b];
    out.sum.assign(n, 0.0);
    out.sum_sq.assign(n, 0.0);
    CoalitionGame::Accumulator acc(game);
    std::vector<std::size_t> order(n);
    const std::size_t lo = b * detail::kSampleBlock;
    const std::size_t hi = std::min(m, lo + detail::kSampleBlock);
    for (std::size_t p = lo; p < hi; ++p) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(DeriveSeed(seed, p));
      std::shuffle(order.begin(), order.end(), rng);
      acc.Reset();
      double prev = acc.value();
      for (std::size_t agent : order) {
        acc.Add(agent);
        const double marginal = acc.value() - prev;
        prev = acc.value();
        out.sum[agent] += marginal;
        out.sum_sq[agent] += marginal * marginal;
      }
    }
  });
  auto est = detail::FinishMoments(blocks, n, m);
  est.evaluations = m * (n + 1);
  return est;
}

// Per sample: one uniform coalition B, and for each agent the marginal
// against B without that agent.
inline CoalitionEstimate SampledBanzhaf(const CoalitionGame& game,
                                        std::size_t m, std::uint64_t seed,
                                        unsigned threads = 1) {
  Require(m >= 1, "sampled Banzhaf needs m >= 1");
  const std::size_t n = game.n();
  const std::size_t n_blocks = (m + detail::kSampleBlock - 1) / detail::kSampleBlock;
  std::vector<detail::MomentSums> blocks(n_blocks);
  const unsigned workers = game.f().ThreadSafe() ? threads : 1;
  ParallelFor(n_blocks, workers, [&](std::size_t b) {
    auto& out = blocks[b];
    out.sum.assign(n, 0.0);
    out.sum_sq.assign(n, 0.0);
    std::vector<char> in(n);
    std::vector<std::size_t> members;
    std::vector<std::size_t> probe;
    const std::size_t lo = b * detail::kSampleBlock;
    const std::size_t hi = std::min(m, lo + detail::kSampleBlock);
    for (std::size_t s = lo; s < hi; ++s) {
      std::mt19937_64 rng(DeriveSeed(seed, s));
      members.clear();
      for (std::size_t i = 0; i < n; ++i) {
        in[i] = static_cast<char>(rng() >> 63);
        if (in[i]) members.push_back(i);
      }
      const double v_b = game.Value(members);
      for (std::size_t i = 0; i < n; ++i) {
        probe.clear();
        double marginal;
        if (in[i]) {
          for (std::size_t a : members) {
            if (a != i) probe.push_back(a);
          }
          marginal = v_b - game.Value(probe);
        } else {
          probe = members;
          probe.insert(std::upper_bound(probe.begin(), probe.end(), i), i);
          marginal = game.Value(probe) - v_b;
        }
        out.sum[i] += marginal;
        out.sum_sq[i] += marginal * marginal;
      }
    }
  });
  auto est = detail::FinishMoments(blocks, n, m);
  est.evaluations = m * (n + 1);
  return est;
}

}  // namespace asattr
