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

// Macro value functions f_n over an n x D feature configuration.
//
// Built-in kinds:
//   lin              mean of g_i = sum_d z_{i,d}
//   heat             log(1 + prod_d m_d), m_d the column means
//   var              population variance of g
//   gini             (1 / 2n^2) sum_{i,j} |g_i - g_j|
//   additive         sum_{i,d} W_{i,d} z_{i,d}
//   quadratic_cross  sum Q_{i,d} z_{i,d}^2 + 1/2 s^T C s,  s_i = sum_d z_{i,d},
//                    optionally scaled by 1/n^2
//   softplus         softplus(a * sum W_{i,d} z_{i,d}) / a
//   custom           user callbacks
//
// Index-weighted kinds (additive, quadratic_cross, softplus) look weights up by
// the agent's identity, so evaluating on a subset takes the subset's original
// agent indices. A weight matrix with a single row is shared by every agent.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asattr/core.hpp"

namespace asattr {

enum class ValueKind {
  kLin,
  kHeat,
  kVar,
  kGini,
  kAdditive,
  kQuadraticCross,
  kSoftplus,
  kCustom,
};

inline std::string_view ToString(ValueKind kind) {
  switch (kind) {
    case ValueKind::kLin: return "lin";
    case ValueKind::kHeat: return "heat";
    case ValueKind::kVar: return "var";
    case ValueKind::kGini: return "gini";
    case ValueKind::kAdditive: return "additive";
    case ValueKind::kQuadraticCross: return "quadratic_cross";
    case ValueKind::kSoftplus: return "softplus";
    case ValueKind::kCustom: return "custom";
  }
  return "unknown";
}

inline ValueKind ParseValueKind(std::string_view name) {
  for (ValueKind k : {ValueKind::kLin, ValueKind::kHeat, ValueKind::kVar,
                      ValueKind::kGini, ValueKind::kAdditive,
                      ValueKind::kQuadraticCross, ValueKind::kSoftplus,
                      ValueKind::kCustom}) {
    if (ToString(k) == name) return k;
  }
  if (name == "quadratic" || name == "quad") return ValueKind::kQuadraticCross;
  Fail(ErrorKind::kUsage, "unknown value function '" + std::string(name) + "'");
}

// Maps row r of a feature matrix to the agent identity used for weight
// lookups. Empty means identity.
using AgentIndex = std::span<const std::size_t>;

struct GradientResult {
  FeatureMatrix grad;
  // Set when gini ranks were assigned among exactly tied g values.
  bool rank_ties = false;
};

struct CustomCallbacks {
  std::function<double(const FeatureMatrix&)> evaluate;
  // Optional. Central finite differences are used when absent.
  std::function<FeatureMatrix(const FeatureMatrix&)> gradient;
  // Value on the empty configuration; 0 when absent.
  std::optional<double> empty_value;
  // False forces single-threaded use by every caller.
  bool thread_safe = true;
};

namespace detail {

inline double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline std::vector<double> RowSums(const FeatureMatrix& z) {
  std::vector<double> g(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double s = 0.0;
    for (double v : z.row(i)) s += v;
    g[i] = s;
  }
  return g;
}

inline std::vector<double> ColumnMeans(const FeatureMatrix& z) {
  std::vector<double> m(z.cols());
  const std::size_t n = z.rows();
  for (std::size_t d = 0; d < z.cols(); ++d) {
    m[d] = PairwiseSumOf(0, n, [&](std::size_t i) { return z(i, d); }) /
           static_cast<double>(n);
  }
  return m;
}

// 1-based average ranks of `g` in ascending order; tied values share the mean
// of the ranks they occupy. Sets *ties when any tie was seen.
inline std::vector<double> MidRanks(std::span<const double> g, bool* ties) {
  const std::size_t n = g.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
  std::vector<double> rank(n);
  bool any_tie = false;
  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k + 1;
    while (e < n && g[order[e]] == g[order[k]]) ++e;
    if (e - k > 1) any_tie = true;
    const double r = 0.5 * static_cast<double>(k + 1 + e);  // mean of k+1..e
    for (std::size_t q = k; q < e; ++q) rank[order[q]] = r;
    k = e;
  }
  if (ties != nullptr) *ties = any_tie;
  return rank;
}

inline std::size_t AgentAt(AgentIndex idx, std::size_t r) {
  return idx.empty() ? r : idx[r];
}

}  // namespace detail

class ValueFunction {
 public:
  static ValueFunction Lin() { return ValueFunction(ValueKind::kLin); }
  static ValueFunction Heat() { return ValueFunction(ValueKind::kHeat); }
  static ValueFunction Var() { return ValueFunction(ValueKind::kVar); }
  static ValueFunction Gini() { return ValueFunction(ValueKind::kGini); }

  static ValueFunction Additive(FeatureMatrix weights) {
    Require(weights.rows() >= 1 && weights.cols() >= 1,
            "additive: empty weight matrix");
    Require(weights.AllFinite(), "additive: non-finite weight");
    ValueFunction f(ValueKind::kAdditive);
    auto p = std::make_shared<Params>();
    p->weights = std::move(weights);
    f.params_ = std::move(p);
    return f;
  }

  // `diag` is Q (rows x D, or 1 x D shared); `coupling` is the symmetric
  // agent-by-agent C with zero diagonal. With `inverse_n2` the value is scaled
  // by 1/n^2 where n is the number of rows evaluated.
  static ValueFunction QuadraticCross(FeatureMatrix diag, FeatureMatrix coupling,
                                      bool inverse_n2 = false) {
    Require(coupling.rows() == coupling.cols(),
            "quadratic_cross: coupling must be square");
    Require(diag.AllFinite() && coupling.AllFinite(),
            "quadratic_cross: non-finite parameter");
    for (std::size_t i = 0; i < coupling.rows(); ++i) {
      Require(coupling(i, i) == 0.0,
              "quadratic_cross: coupling diagonal must be zero");
      for (std::size_t j = 0; j < i; ++j) {
        Require(coupling(i, j) == coupling(j, i),
                "quadratic_cross: coupling must be symmetric");
      }
    }
    ValueFunction f(ValueKind::kQuadraticCross);
    auto p = std::make_shared<Params>();
    p->weights = std::move(diag);
    p->coupling = std::move(coupling);
    p->inverse_n2 = inverse_n2;
    f.params_ = std::move(p);
    return f;
  }

  // f_n = (1/n^2) sum_{i<j} s_i s_j over `n_agents` identities with D = dims.
  static ValueFunction PairwiseProductMean(std::size_t n_agents,
                                           std::size_t dims = 1) {
    FeatureMatrix c(n_agents, n_agents, 1.0);
    for (std::size_t i = 0; i < n_agents; ++i) c(i, i) = 0.0;
    return QuadraticCross(FeatureMatrix(1, dims, 0.0), std::move(c), true);
  }

  static ValueFunction Softplus(double scale, FeatureMatrix weights) {
    Require(scale > 0.0 && std::isfinite(scale), "softplus: scale must be > 0");
    Require(weights.rows() >= 1 && weights.AllFinite(),
            "softplus: bad weight matrix");
    ValueFunction f(ValueKind::kSoftplus);
    auto p = std::make_shared<Params>();
    p->weights = std::move(weights);
    p->scale = scale;
    f.params_ = std::move(p);
    return f;
  }

  static ValueFunction Custom(CustomCallbacks callbacks,
                              std::string name = "custom") {
    Require(static_cast<bool>(callbacks.evaluate),
            "custom: evaluate callback required");
    ValueFunction f(ValueKind::kCustom);
    auto p = std::make_shared<Params>();
    p->custom = std::move(callbacks);
    p->name = std::move(name);
    f.params_ = std::move(p);
    return f;
  }

  static ValueFunction FromKind(ValueKind kind) {
    switch (kind) {
      case ValueKind::kLin: return Lin();
      case ValueKind::kHeat: return Heat();
      case ValueKind::kVar: return Var();
      case ValueKind::kGini: return Gini();
      default:
        Fail(ErrorKind::kUsage, std::string(ToString(kind)) +
                                    " needs parameters; use its factory");
    }
  }

  ValueKind kind() const noexcept { return kind_; }

  std::string name() const {
    if (kind_ == ValueKind::kCustom) return params_->name;
    return std::string(ToString(kind_));
  }

  // Closed-form attribution exists (zero baseline only).
  bool HasAnalyticAttribution() const noexcept {
    return kind_ == ValueKind::kLin || kind_ == ValueKind::kHeat ||
           kind_ == ValueKind::kVar || kind_ == ValueKind::kGini;
  }

  bool IndexWeighted() const noexcept {
    return kind_ == ValueKind::kAdditive ||
           kind_ == ValueKind::kQuadraticCross ||
           kind_ == ValueKind::kSoftplus;
  }

  bool PermutationInvariant() const {
    switch (kind_) {
      case ValueKind::kLin:
      case ValueKind::kHeat:
      case ValueKind::kVar:
      case ValueKind::kGini:
        return true;
      case ValueKind::kSoftplus:
      case ValueKind::kAdditive:
        return params_->weights.rows() == 1;
      default:
        return false;
    }
  }

  bool ThreadSafe() const noexcept {
    return kind_ != ValueKind::kCustom || params_->custom.thread_safe;
  }

  double scale() const { return params_ ? params_->scale : 0.0; }
  const FeatureMatrix& weights() const { return params_->weights; }
  const FeatureMatrix& coupling() const { return params_->coupling; }
  bool inverse_n2() const { return params_ && params_->inverse_n2; }

  // f evaluated on a configuration with no agents.
  double EmptyValue() const {
    switch (kind_) {
      case ValueKind::kSoftplus:
        return std::log(2.0) / params_->scale;
      case ValueKind::kCustom:
        return params_->custom.empty_value.value_or(0.0);
      default:
        return 0.0;
    }
  }

  double Evaluate(const FeatureMatrix& z, AgentIndex idx = {}) const {
    CheckInput(z, idx);
    const std::size_t n = z.rows();
    const double nd = static_cast<double>(n);
    switch (kind_) {
      case ValueKind::kLin: {
        const auto g = detail::RowSums(z);
        return PairwiseSum(g) / nd;
      }
      case ValueKind::kHeat: {
        const auto m = detail::ColumnMeans(z);
        double h = 1.0;
        for (double v : m) h *= v;
        return std::log1p(h);
      }
      case ValueKind::kVar: {
        const auto g = detail::RowSums(z);
        const double mean = PairwiseSum(g) / nd;
        return PairwiseSumOf(0, n, [&](std::size_t i) {
                 const double e = g[i] - mean;
                 return e * e;
               }) / nd;
      }
      case ValueKind::kGini: {
        auto g = detail::RowSums(z);
        std::sort(g.begin(), g.end());
        // (1/n^2) sum_k (2k - n - 1) g_(k), k 1-based over the sorted values.
        return PairwiseSumOf(0, n, [&](std::size_t k) {
                 return (2.0 * static_cast<double>(k + 1) - nd - 1.0) * g[k];
               }) / (nd * nd);
      }
      case ValueKind::kAdditive:
        return WeightedSum(z, idx);
      case ValueKind::kSoftplus:
        return detail::Softplus(params_->scale * WeightedSum(z, idx)) /
               params_->scale;
      case ValueKind::kQuadraticCross:
        return QuadraticValue(z, idx);
      case ValueKind::kCustom:
        return params_->custom.evaluate(z);
    }
    return 0.0;
  }

  GradientResult Gradient(const FeatureMatrix& z, AgentIndex idx = {}) const {
    CheckInput(z, idx);
    const std::size_t n = z.rows();
    const std::size_t dims = z.cols();
    const double nd = static_cast<double>(n);
    GradientResult out{FeatureMatrix(n, dims), false};
    FeatureMatrix& grad = out.grad;
    switch (kind_) {
      case ValueKind::kLin: {
        std::fill(grad.values().begin(), grad.values().end(), 1.0 / nd);
        break;
      }
      case ValueKind::kHeat: {
        const auto m = detail::ColumnMeans(z);
        double h = 1.0;
        for (double v : m) h *= v;
        // prod_{e != d} m_e via prefix/suffix products, so a zero mean in one
        // column does not poison the others.
        std::vector<double> others(dims, 1.0);
        double prefix = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
          others[d] = prefix;
          prefix *= m[d];
        }
        double suffix = 1.0;
        for (std::size_t d = dims; d-- > 0;) {
          others[d] *= suffix;
          suffix *= m[d];
        }
        for (std::size_t d = 0; d < dims; ++d) {
          others[d] /= nd * (1.0 + h);
        }
        for (std::size_t i = 0; i < n; ++i) {
          std::copy(others.begin(), others.end(), grad.row(i).begin());
        }
        break;
      }
      case ValueKind::kVar: {
        const auto g = detail::RowSums(z);
        const double mean = PairwiseSum(g) / nd;
        for (std::size_t i = 0; i < n; ++i) {
          const double v = 2.0 / nd * (g[i] - mean);
          for (std::size_t d = 0; d < dims; ++d) grad(i, d) = v;
        }
        break;
      }
      case ValueKind::kGini: {
        const auto g = detail::RowSums(z);
        const auto rank = detail::MidRanks(g, &out.rank_ties);
        for (std::size_t i = 0; i < n; ++i) {
          const double v = (2.0 * rank[i] - nd - 1.0) / (nd * nd);
          for (std::size_t d = 0; d < dims; ++d) grad(i, d) = v;
        }
        break;
      }
      case ValueKind::kAdditive: {
        for (std::size_t i = 0; i < n; ++i) {
          auto w = WeightRow(detail::AgentAt(idx, i));
          std::copy(w.begin(), w.end(), grad.row(i).begin());
        }
        break;
      }
      case ValueKind::kSoftplus: {
        const double slope =
            detail::Sigmoid(params_->scale * WeightedSum(z, idx));
        for (std::size_t i = 0; i < n; ++i) {
          auto w = WeightRow(detail::AgentAt(idx, i));
          for (std::size_t d = 0; d < dims; ++d) grad(i, d) = slope * w[d];
        }
        break;
      }
      case ValueKind::kQuadraticCross: {
        const auto s = detail::RowSums(z);
        const double scale = params_->inverse_n2 ? 1.0 / (nd * nd) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t ai = detail::AgentAt(idx, i);
          double cross = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            cross += params_->coupling(ai, detail::AgentAt(idx, j)) * s[j];
          }
          auto q = WeightRow(ai);
          for (std::size_t d = 0; d < dims; ++d) {
            grad(i, d) = scale * (2.0 * q[d] * z(i, d) + cross);
          }
        }
        break;
      }
      case ValueKind::kCustom: {
        if (params_->custom.gradient) {
          grad = params_->custom.gradient(z);
          Require(grad.rows() == n && grad.cols() == dims,
                  "custom gradient returned wrong shape");
        } else {
          grad = FiniteDifferenceGradient(z);
        }
        break;
      }
    }
    return out;
  }

  // Central differences with step max(1e-6, 1e-6 |z|).
  FeatureMatrix FiniteDifferenceGradient(const FeatureMatrix& z,
                                         AgentIndex idx = {}) const {
    FeatureMatrix grad(z.rows(), z.cols());
    FeatureMatrix probe = z;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t d = 0; d < z.cols(); ++d) {
        const double x = z(i, d);
        const double h = std::max(1e-6, 1e-6 * std::abs(x));
        probe(i, d) = x + h;
        const double up = Evaluate(probe, idx);
        probe(i, d) = x - h;
        const double down = Evaluate(probe, idx);
        probe(i, d) = x;
        grad(i, d) = (up - down) / (2.0 * h);
      }
    }
    return grad;
  }

 private:
  struct Params {
    FeatureMatrix weights;   // W (additive, softplus) or Q (quadratic_cross)
    FeatureMatrix coupling;  // C (quadratic_cross)
    double scale = 0.0;      // a (softplus)
    bool inverse_n2 = false;
    CustomCallbacks custom;
    std::string name;
  };

  explicit ValueFunction(ValueKind kind) : kind_(kind) {}

  void CheckInput(const FeatureMatrix& z, AgentIndex idx) const {
    if (z.rows() == 0) Fail(ErrorKind::kUsage, name() + ": n must be >= 1");
    if (z.cols() == 0) Fail(ErrorKind::kUsage, name() + ": D must be >= 1");
    if (!z.AllFinite()) Fail(ErrorKind::kData, name() + ": non-finite input");
    if (!idx.empty()) {
      Require(idx.size() == z.rows(), name() + ": agent index size mismatch");
    }
    if (IndexWeighted()) {
      const auto& w = params_->weights;
      Require(w.cols() == z.cols(), name() + ": weight dims mismatch");
      std::size_t max_agent = 0;
      for (std::size_t r = 0; r < z.rows(); ++r) {
        max_agent = std::max(max_agent, detail::AgentAt(idx, r));
      }
      if (w.rows() != 1) {
        Require(max_agent < w.rows(), name() + ": agent without weights");
      }
      if (kind_ == ValueKind::kQuadraticCross) {
        Require(max_agent < params_->coupling.rows(),
                name() + ": agent without coupling row");
      }
    }
  }

  std::span<const double> WeightRow(std::size_t agent) const {
    const auto& w = params_->weights;
    return w.rows() == 1 ? w.row(0) : w.row(agent);
  }

  double WeightedSum(const FeatureMatrix& z, AgentIndex idx) const {
    return PairwiseSumOf(0, z.rows(), [&](std::size_t i) {
      auto w = WeightRow(detail::AgentAt(idx, i));
      double s = 0.0;
      for (std::size_t d = 0; d < z.cols(); ++d) s += w[d] * z(i, d);
      return s;
    });
  }

  double QuadraticValue(const FeatureMatrix& z, AgentIndex idx) const {
    const std::size_t n = z.rows();
    const auto s = detail::RowSums(z);
    double diag = 0.0;
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ai = detail::AgentAt(idx, i);
      auto q = WeightRow(ai);
      for (std::size_t d = 0; d < z.cols(); ++d) diag += q[d] * z(i, d) * z(i, d);
      for (std::size_t j = i + 1; j < n; ++j) {
        cross += params_->coupling(ai, detail::AgentAt(idx, j)) * s[i] * s[j];
      }
    }
    const double nd = static_cast<double>(n);
    const double scale = params_->inverse_n2 ? 1.0 / (nd * nd) : 1.0;
    return scale * (diag + cross);
  }

  ValueKind kind_;
  std::shared_ptr<const Params> params_;
};

// One mixed partial to probe: d^2 f / dz_{i,d} dz_{j,dp}, i != j.
struct OffDiagonalEntry {
  std::size_t i = 0;
  std::size_t d = 0;
  std::size_t j = 0;
  std::size_t dp = 0;
};

inline std::vector<OffDiagonalEntry> SampleOffDiagonalEntries(
    std::size_t n, std::size_t dims, std::size_t count, std::uint64_t seed) {
  Require(n >= 2 && dims >= 1, "off-diagonal probe needs n >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> agent(0, n - 1);
  std::uniform_int_distribution<std::size_t> dim(0, dims - 1);
  std::vector<OffDiagonalEntry> out;
  out.reserve(count);
  while (out.size() < count) {
    OffDiagonalEntry e{agent(rng), dim(rng), agent(rng), dim(rng)};
    if (e.i != e.j) out.push_back(e);
  }
  return out;
}

// Largest |central mixed second difference| over the sampled cross-agent
// entries. Numerically zero exactly when f decomposes additively over agents
// on the probed region.
inline double HessianOffDiagonalProbe(const ValueFunction& f,
                                      const FeatureMatrix& z,
                                      std::span<const OffDiagonalEntry> entries,
                                      AgentIndex idx = {}) {
  Require(z.rows() >= 2, "off-diagonal probe needs n >= 2");
  FeatureMatrix p = z;
  double worst = 0.0;
  for (const auto& e : entries) {
    Require(e.i != e.j && e.i < z.rows() && e.j < z.rows() &&
                e.d < z.cols() && e.dp < z.cols(),
            "off-diagonal probe: bad entry");
    const double x = z(e.i, e.d);
    const double y = z(e.j, e.dp);
    const double hx = 1e-4 * std::max(1.0, std::abs(x));
    const double hy = 1e-4 * std::max(1.0, std::abs(y));
    auto at = [&](double sx, double sy) {
      p(e.i, e.d) = x + sx * hx;
      p(e.j, e.dp) = y + sy * hy;
      return f.Evaluate(p, idx);
    };
    const double mixed =
        (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hx * hy);
    p(e.i, e.d) = x;
    p(e.j, e.dp) = y;
    worst = std::max(worst, std::abs(mixed));
  }
  return worst;
}

}  // namespace asattr
