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

// Acceptance criteria AC1-AC10. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "asattr/asattr.hpp"
#include "asattr/cli.hpp"

namespace {

using namespace asattr;

struct Outcome {
  bool pass = false;
  std::string detail;
};

FeatureMatrix AbsGaussian(std::size_t n, std::size_t dims, std::uint64_t seed) {
  SyntheticPanelSpec spec;
  spec.n_agents = n;
  spec.n_dims = dims;
  spec.feature_law = FeatureLaw::kAbsGaussian;
  spec.seed = seed;
  return GenerateSynthetic(spec).Step(0);
}

FeatureMatrix UniformPm1(std::size_t n, std::size_t dims, std::uint64_t seed) {
  SyntheticPanelSpec spec;
  spec.n_agents = n;
  spec.n_dims = dims;
  spec.feature_law = FeatureLaw::kUniformPm1;
  spec.seed = seed;
  return GenerateSyntheticRaw(spec)[0];
}

FeatureMatrix Gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FeatureMatrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

FeatureMatrix SymmetrizedCoupling(std::size_t n, std::uint64_t seed) {
  const FeatureMatrix g = Gaussian(n, n, seed);
  FeatureMatrix c(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) c(i, j) = 0.5 * (g(i, j) + g(j, i));
    }
  }
  return c;
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double Mae(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

const std::vector<ValueKind> kAnalyticKinds = {ValueKind::kLin, ValueKind::kHeat,
                                               ValueKind::kVar, ValueKind::kGini};

// ---------------------------------------------------------------------------

Outcome Ac1() {
  const auto dir = std::filesystem::temp_directory_path() / "asattr_acceptance_verify";
  std::ostringstream out, err;
  const int code = cli::RunCli({"verify", "--out-dir", dir.string()}, out, err);
  const auto r = CounterexampleCheck();
  double worst = 0.0;
  worst = std::max(worst, MaxAbsDiff(r.phi_full, std::vector<double>{1.0 / 6, 1.0 / 6, 2.0 / 9}));
  worst = std::max(worst, std::abs(r.delta_v_full - 5.0 / 9.0));
  worst = std::max(worst, MaxAbsDiff(r.shares_full, std::vector<double>{0.3, 0.3, 0.4}));
  worst = std::max(worst, MaxAbsDiff(r.shares_subset, std::vector<double>{0.5, 0.5}));
  worst = std::max(worst, MaxAbsDiff(r.implied_c, std::vector<double>{5.0 / 3.0, 5.0 / 4.0}));
  worst = std::max(worst, MaxAbsDiff(r.phi_full_shapley, r.phi_full));
  bool json_ok = false;
  {
    std::ifstream is(dir / "verify.json");
    const auto j = nlohmann::json::parse(is, nullptr, false);
    json_ok = !j.is_discarded() && j.is_array() && !j.empty() &&
              std::all_of(j.begin(), j.end(), [](const auto& l) { return l["pass"] == true; });
  }
  std::filesystem::remove_all(dir);
  const bool distinct = std::abs(r.implied_c[0] - r.implied_c[1]) > 0.1;
  return {code == 0 && json_ok && worst <= 1e-12 && distinct,
          fmt::format("verify exit={} max abs error={:.2g} c=({:.6f}, {:.6f})", code, worst,
                      r.implied_c[0], r.implied_c[1])};
}

Outcome Ac2() {
  std::mt19937_64 rng(2);
  double eff = 0.0, sym = 0.0, null_phi = 0.0, lin = 0.0;
  for (int panel = 0; panel < 50; ++panel) {
    const std::size_t n = 3 + rng() % 98;  // 3..100
    FeatureMatrix z = AbsGaussian(n, 3, rng());
    for (std::size_t d = 0; d < 3; ++d) {
      z(1, d) = z(0, d);
      z(2, d) = 0.0;
    }
    for (ValueKind k : kAnalyticKinds) {
      const auto f = ValueFunction::FromKind(k);
      const auto a = AttributeAnalytic(f, z);
      eff = std::max(eff, a.EfficiencyResidual() / std::abs(a.delta_v));
      const auto m = AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK);
      for (const auto* r : {&a, &m}) {
        sym = std::max(sym, std::abs(r->phi[0] - r->phi[1]));
        null_phi = std::max(null_phi, std::abs(r->phi[2]));
      }
    }
    // Linearity in f at fixed K, for a random combination of two kinds.
    const auto f1 = ValueFunction::FromKind(kAnalyticKinds[rng() % 4]);
    const auto f2 = ValueFunction::FromKind(kAnalyticKinds[rng() % 4]);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const double al = coef(rng), be = coef(rng);
    CustomCallbacks cb;
    cb.evaluate = [&](const FeatureMatrix& x) { return al * f1.Evaluate(x) + be * f2.Evaluate(x); };
    cb.gradient = [&](const FeatureMatrix& x) {
      auto g = f1.Gradient(x).grad;
      const auto h = f2.Gradient(x).grad;
      for (std::size_t e = 0; e < g.values().size(); ++e) {
        g.values()[e] = al * g.values()[e] + be * h.values()[e];
      }
      return g;
    };
    const auto combo = ValueFunction::Custom(cb, "combo");
    const auto p1 = AttributePathIntegral(f1, z, BaselineSpec::Zero(), kDefaultK).phi;
    const auto p2 = AttributePathIntegral(f2, z, BaselineSpec::Zero(), kDefaultK).phi;
    const auto pc = AttributePathIntegral(combo, z, BaselineSpec::Zero(), kDefaultK).phi;
    for (std::size_t i = 0; i < n; ++i) {
      lin = std::max(lin, std::abs(pc[i] - (al * p1[i] + be * p2[i])));
    }
  }
  return {eff <= 1e-9 && sym <= 1e-12 && null_phi == 0.0 && lin <= 1e-12,
          fmt::format("efficiency rel={:.2g} symmetry={:.2g} null={:.2g} linearity={:.2g}", eff,
                      sym, null_phi, lin)};
}

Outcome Ac3() {
  double worst_mae = 0.0;
  double worst_rho = 1.0;
  for (std::size_t n : {10u, 100u, 1000u, 10000u}) {
    const auto z = AbsGaussian(n, 3, 30 + n);
    for (ValueKind k : kAnalyticKinds) {
      const auto f = ValueFunction::FromKind(k);
      const auto a = AttributeAnalytic(f, z).phi;
      const auto m = AttributePathIntegral(f, z, BaselineSpec::Zero(), 300).phi;
      worst_mae = std::max(worst_mae, Mae(a, m));
      worst_rho = std::min(worst_rho, SpearmanRho(a, m));
    }
  }
  return {worst_mae <= 1e-7 && worst_rho >= 1.0 - 1e-12,
          fmt::format("max MAE={:.2g} min Spearman={:.12f}", worst_mae, worst_rho)};
}

Outcome Ac4() {
  const auto z = AbsGaussian(10000, 3, 4);
  const std::vector<int> ks = {5, 10, 20, 40, 50, 100, 300};
  const auto rows = KConvergenceSweep(ValueFunction::Heat(), z, ks);
  auto err = [&](int K) {
    for (const auto& r : rows) {
      if (r.K == K) return r.rel_l1;
    }
    return std::nan("");
  };
  bool ok = true;
  std::string ratios;
  for (int K : {5, 10, 20, 50}) {
    const double ratio = err(K) / err(2 * K);
    ok = ok && ratio >= 3.2 && ratio <= 4.8;
    ratios += fmt::format(" {}:{:.3f}", K, ratio);
  }
  ok = ok && err(300) <= 1e-5;
  return {ok, fmt::format("ratios{} err(300)={:.2g}", ratios, err(300))};
}

Outcome Ac5() {
  double worst = 0.0;
  std::size_t outside = 0, checked = 0;
  for (std::size_t n : {3u, 5u, 8u}) {
    const auto z = UniformPm1(n, 5, 50 + n);
    const auto f = ValueFunction::QuadraticCross(Gaussian(n, 5, 60 + n), SymmetrizedCoupling(n, 70 + n));
    const CoalitionGame game(f, z, CoalitionSemantics::kRestrict);
    const auto exact = ExactShapley(game).phi;
    const auto as = AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK).phi;
    worst = std::max(worst, MaxAbsDiff(exact, as));
    const auto est = SampledShapley(game, 2000, 5);
    for (std::size_t i = 0; i < n; ++i) {
      ++checked;
      if (std::abs(est.phi[i] - exact[i]) > 3.0 * est.std_error[i]) ++outside;
    }
  }
  return {worst <= 1e-10 && outside == 0,
          fmt::format("max |Shapley - AS|={:.2g}; sampled outside 3 SE: {}/{}", worst, outside,
                      checked)};
}

Outcome Ac6() {
  double worst_mae = 0.0;
  double worst_cos = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto z = UniformPm1(100, 5, 100 + seed);
    const auto w = Gaussian(100, 5, 200 + seed);
    const auto f = ValueFunction::Additive(w);
    std::vector<double> truth(100, 0.0);
    for (std::size_t i = 0; i < 100; ++i) {
      for (std::size_t d = 0; d < 5; ++d) truth[i] += w(i, d) * z(i, d);
    }
    const CoalitionGame game(f, z);
    for (const auto& phi : {AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK).phi,
                            LeaveOneOut(game).phi, SampledShapley(game, 200, seed).phi,
                            SampledBanzhaf(game, 200, seed).phi}) {
      worst_mae = std::max(worst_mae, Mae(phi, truth));
      worst_cos = std::min(worst_cos, Cosine(phi, truth));
    }
  }
  return {worst_mae <= 1e-10 && worst_cos >= 1.0 - 1e-12,
          fmt::format("ours/LOO/sampled Shapley/sampled Banzhaf: max MAE={:.2g} min cosine-1={:.2g}",
                      worst_mae, worst_cos - 1.0)};
}

Outcome Ac7() {
  BenchConfig big;
  big.f = ValueKind::kHeat;
  big.sizes = {100000, 1000000};
  big.methods = {BenchMethod::kOursAnalytic};
  big.repeats = 5;
  const auto scale = BenchScaling(big);
  const double growth = scale[1].seconds / scale[0].seconds;

  BenchConfig mid;
  mid.f = ValueKind::kHeat;
  mid.sizes = {10000};
  mid.methods = {BenchMethod::kOursAnalytic, BenchMethod::kSampledShapley};
  mid.m_samples = 1000;
  mid.repeats = 3;
  const auto vs = BenchScaling(mid);
  const double speedup = vs[1].seconds / vs[0].seconds;
  return {scale[0].status == "ok" && scale[1].status == "ok" && vs[1].status == "ok" &&
              growth < 20.0 && speedup >= 1e3,
          fmt::format("analytic t(1e6)/t(1e5)={:.2f}; sampled Shapley/analytic at 1e4={:.3g} "
                      "({:.3g}s vs {:.3g}s)",
                      growth, speedup, vs[1].seconds, vs[0].seconds)};
}

struct DichotomyData {
  FeaturePanel panel;
  TierPartition partition;
  FlipReport report;
};

const DichotomyData& Dichotomy() {
  static const DichotomyData data = [] {
    SyntheticPanelSpec spec;
    spec.n_agents = 100000;
    spec.feature_law = FeatureLaw::kParetoReach;
    spec.reach_engagement_correlation = 0.7;
    spec.seed = 8;
    DichotomyData d;
    d.panel = GenerateSynthetic(spec);
    d.partition = MakeTierPartition(d.panel, AnchorMetric::Followers());
    FlipConfig cfg;
    cfg.protocols = {SubsetProtocol::kBiasVisibility, SubsetProtocol::kRandom};
    cfg.functions = {ValueFunction::Lin(), ValueFunction::Var(), ValueFunction::Gini()};
    cfg.sizes = {100};
    cfg.seeds.resize(10);
    std::iota(cfg.seeds.begin(), cfg.seeds.end(), std::uint64_t{0});
    d.report = FlipStudy(d.panel.Step(0), ComputeAgentMetrics(d.panel), d.partition, cfg);
    return d;
  }();
  return data;
}

Outcome Ac8() {
  const auto& d = Dichotomy();
  std::size_t lin_ok = 0, var_ok = 0, gini_ok = 0, lin_rho = 0;
  double lin_eps = 0.0, var_min = 1e300, gini_min = 1e300;
  for (const auto& c : d.report.cells) {
    if (c.protocol != SubsetProtocol::kBiasVisibility || c.degenerate) continue;
    if (c.f_name == "lin") {
      lin_eps = std::max(lin_eps, c.epsilon);
      lin_ok += c.epsilon <= 1e-7;
      lin_rho += c.spearman >= 1.0 - 1e-12;
    } else if (c.f_name == "var") {
      var_min = std::min(var_min, c.epsilon);
      var_ok += c.epsilon >= 0.01;
    } else if (c.f_name == "gini") {
      gini_min = std::min(gini_min, c.epsilon);
      gini_ok += c.epsilon >= 0.01;
    }
  }
  return {lin_ok == 10 && lin_rho == 10 && var_ok >= 9 && gini_ok >= 9,
          fmt::format("lin eps<=1e-7 {}/10 (max {:.2g}), Spearman=1 {}/10; var eps>=0.01 {}/10 "
                      "(min {:.3g}); gini eps>=0.01 {}/10 (min {:.3g})",
                      lin_ok, lin_eps, lin_rho, var_ok, var_min, gini_ok, gini_min)};
}

Outcome Ac9() {
  const auto& d = Dichotomy();
  std::size_t var_f = 0;
  for (std::size_t k = 0; k < d.report.f_names.size(); ++k) {
    if (d.report.f_names[k] == "var") var_f = k;
  }
  const double full_top = d.report.full_shares[var_f][0];
  std::size_t exceed = 0;
  double random_members = 0.0;
  std::size_t random_cells = 0;
  double biased_mean = 0.0;
  for (const auto& c : d.report.cells) {
    if (c.f_name != "var") continue;
    if (c.protocol == SubsetProtocol::kBiasVisibility) {
      if (!c.degenerate && c.shares[0] > full_top) ++exceed;
      biased_mean += c.degenerate ? 0.0 : c.shares[0] / 10.0;
    } else if (c.protocol == SubsetProtocol::kRandom) {
      random_members += static_cast<double>(c.top_members);
      ++random_cells;
    }
  }
  // Top-1% membership fraction of a random size-100 subset, averaged over the
  // seeds: Binomial(100 * seeds, 0.01) / (100 * seeds).
  const double trials = 100.0 * static_cast<double>(random_cells);
  const double frac = random_members / trials;
  const double sigma = std::sqrt(0.01 * 0.99 / trials);
  const bool in_band = std::abs(frac - 0.01) <= 3.0 * sigma;
  return {exceed >= 9 && in_band,
          fmt::format("var biased top share > full ({:.4f}) in {}/10 (mean {:.4f}); random "
                      "top-1% fraction {:.4f} vs 0.01 +- {:.4f}",
                      full_top, exceed, biased_mean, frac, 3.0 * sigma)};
}

Outcome Ac10() {
  double min_j = 1.0, min_tau = 1.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto z = AbsGaussian(10000, 3, 300 + seed);
    const auto f = ValueFunction::Heat();
    const auto a = AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK).phi;
    const auto b = AttributePathIntegral(f, z, BaselineSpec::PopulationMean(), kDefaultK).phi;
    const auto agree = CompareRankings(a, b, 10);
    min_j = std::min(min_j, agree.jaccard_top_k);
    min_tau = std::min(min_tau, agree.kendall_tau);
  }
  double min_path_tau = 1.0, mean_path_tau = 0.0;
  const int trials = 10;
  for (int s = 0; s < trials; ++s) {
    const std::size_t n = 100;
    const auto z = UniformPm1(n, 5, 400 + s);
    const auto f = ValueFunction::Softplus(0.35, Gaussian(n, 5, 500 + s));
    const auto lin = AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK).phi;
    const auto per = AttributePathIntegral(f, z, BaselineSpec::Zero(), kDefaultK,
                                           PathKind::kPermuted, 600 + s)
                         .phi;
    const double tau = KendallTau(lin, per);
    min_path_tau = std::min(min_path_tau, tau);
    mean_path_tau += tau / trials;
  }
  // The path threshold applies to the mean tau over panels.
  return {min_j == 1.0 && min_tau >= 0.99 && mean_path_tau >= 0.9,
          fmt::format("heat zero vs mean baseline: min J10={:.2f} min tau={:.6f}; softplus "
                      "linear vs permuted path (n=100, 10 panels): mean tau={:.4f} min tau={:.4f}",
                      min_j, min_tau, mean_path_tau, min_path_tau)};
}

struct Criterion {
  const char* id;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", 1.0, Ac1},     {"AC2", 10.0, Ac2},   {"AC3", 60.0, Ac3},  {"AC4", 60.0, Ac4},
      {"AC5", 30.0, Ac5},    {"AC6", 30.0, Ac6},   {"AC7", 1800.0, Ac7}, {"AC8", 300.0, Ac8},
      {"AC9", 300.0, Ac9},   {"AC10", 120.0, Ac10}};
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.id << ' ' << o.detail
              << fmt::format(" [{:.2f}s, limit {:.0f}s{}]", secs, c.limit_seconds,
                             in_time ? "" : ", over time")
              << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : fmt::format("{} acceptance criteria failed", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
