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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "asattr/core.hpp"

namespace asattr {

// Average (1-based) ranks; ties share the mean of their positions.
inline std::vector<double> AverageRanks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    while (end < n && x[order[end]] == x[order[k]]) ++end;
    const double r = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t j = k; j < end; ++j) rank[order[j]] = r;
    k = end;
  }
  return rank;
}

// NaN when either input is constant.
inline double PearsonCorrelation(std::span<const double> a,
                                 std::span<const double> b) {
  Require(a.size() == b.size() && a.size() >= 2,
          "correlation needs equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = PairwiseSum(a) / n;
  const double mb = PairwiseSum(b) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

inline double SpearmanRho(std::span<const double> a, std::span<const double> b) {
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  return PearsonCorrelation(ra, rb);
}

namespace detail {

// Strict inversions in v, counted during a merge sort.
inline std::uint64_t CountInversions(std::vector<double>& v,
                                     std::vector<double>& scratch,
                                     std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = CountInversions(v, scratch, lo, mid) +
                      CountInversions(v, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

template <typename Eq>
std::uint64_t TiedPairs(std::size_t n, const Eq& same_as_prev) {
  std::uint64_t pairs = 0;
  std::uint64_t run = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && same_as_prev(k)) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

}  // namespace detail

// Kendall tau-b in O(n log n). NaN when either input is constant.
inline double KendallTau(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size() && a.size() >= 2,
          "Kendall tau needs equal lengths >= 2");
  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    return b[i] < b[j];
  });
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = a[order[k]];
    y[k] = b[order[k]];
  }
  const std::uint64_t x_ties =
      detail::TiedPairs(n, [&](std::size_t k) { return x[k] == x[k - 1]; });
  const std::uint64_t joint_ties = detail::TiedPairs(n, [&](std::size_t k) {
    return x[k] == x[k - 1] && y[k] == y[k - 1];
  });
  std::vector<double> scratch(n);
  const std::uint64_t discordant = detail::CountInversions(y, scratch, 0, n);
  // y is now sorted.
  const std::uint64_t y_ties =
      detail::TiedPairs(n, [&](std::size_t k) { return y[k] == y[k - 1]; });
  const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double num = total - static_cast<double>(x_ties) -
                     static_cast<double>(y_ties) +
                     static_cast<double>(joint_ties) -
                     2.0 * static_cast<double>(discordant);
  const double den = std::sqrt(total - static_cast<double>(x_ties)) *
                     std::sqrt(total - static_cast<double>(y_ties));
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

// Indices of the k largest |v|, ties by lower index.
inline std::vector<std::size_t> TopKByMagnitude(std::span<const double> v,
                                                std::size_t k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, v.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](std::size_t i, std::size_t j) {
                      const double ai = std::abs(v[i]);
                      const double aj = std::abs(v[j]);
                      if (ai != aj) return ai > aj;
                      return i < j;
                    });
  order.resize(k);
  return order;
}

inline double TopKJaccard(std::span<const double> a, std::span<const double> b,
                          std::size_t k) {
  Require(a.size() == b.size(), "Jaccard needs equal lengths");
  Require(k >= 1, "Jaccard needs k >= 1");
  auto ta = TopKByMagnitude(a, k);
  auto tb = TopKByMagnitude(b, k);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  std::vector<std::size_t> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                        std::back_inserter(common));
  const std::size_t uni = ta.size() + tb.size() - common.size();
  return uni == 0 ? 1.0
                  : static_cast<double>(common.size()) / static_cast<double>(uni);
}

struct RankAgreement {
  double kendall_tau = 0.0;
  double spearman_rho = 0.0;
  double jaccard_top_k = 0.0;
};

inline RankAgreement CompareRankings(std::span<const double> a,
                                     std::span<const double> b,
                                     std::size_t k = 10) {
  Require(a.size() == b.size() && a.size() >= 2,
          "rank agreement needs equal lengths >= 2");
  return {KendallTau(a, b), SpearmanRho(a, b), TopKJaccard(a, b, k)};
}

}  // namespace asattr
