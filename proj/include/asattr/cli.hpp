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

// The `asattr` command line. Exit codes: 0 ok, 1 data/degenerate/infeasible
// error, 2 usage error.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "asattr/attribution.hpp"
#include "asattr/baselines.hpp"
#include "asattr/core.hpp"
#include "asattr/io.hpp"
#include "asattr/panel.hpp"
#include "asattr/ranks.hpp"
#include "asattr/scalingbias.hpp"
#include "asattr/study.hpp"
#include "asattr/valuefn.hpp"

namespace asattr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

inline std::string Num(double v) { return fmt::format("{:.17g}", v); }

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned threads = 1;
};

// Collects output files and timings, then writes manifest.json.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv,
           const CommonOptions& common)
      : command_(std::move(command)), argv_(std::move(argv)), common_(common) {
    start_ = std::chrono::steady_clock::now();
  }

  std::string Path(const std::string& name) {
    std::filesystem::create_directories(common_.out_dir);
    const auto p = (std::filesystem::path(common_.out_dir) / name).string();
    outputs_.push_back(name);
    return p;
  }

  void SetConfig(const std::string& canonical) { config_ = canonical; }
  void AddSeed(std::uint64_t s) { seeds_.push_back(s); }
  void Time(const std::string& label, double seconds) { timings_[label] = seconds; }

  void Write() {
    nlohmann::json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["config_hash"] = fmt::format("{:016x}", Fnv1a64(config_));
    std::vector<std::uint64_t> seeds = seeds_;
    if (seeds.empty()) seeds.push_back(common_.seed);
    j["seeds"] = seeds;
    j["version"] = kVersion;
    j["threads"] = common_.threads;
    j["outputs"] = outputs_;
    timings_["total_seconds"] = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - start_)
                                    .count();
    j["timings"] = timings_;
    std::filesystem::create_directories(common_.out_dir);
    std::ofstream os(std::filesystem::path(common_.out_dir) / "manifest.json");
    os << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  CommonOptions common_;
  std::string config_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------
// Value-function construction from flags

struct ValueFnOptions {
  std::string name = "lin";
  std::string weights_csv;
  std::string coupling_csv;
  double scale = 0.35;
  bool pairwise_mean = false;  // quadratic: all-ones coupling, 1/n^2
};

inline ValueFunction BuildValueFunction(const ValueFnOptions& o,
                                        std::size_t n_agents,
                                        std::size_t dims) {
  const ValueKind kind = ParseValueKind(o.name);
  switch (kind) {
    case ValueKind::kLin:
    case ValueKind::kHeat:
    case ValueKind::kVar:
    case ValueKind::kGini:
      return ValueFunction::FromKind(kind);
    case ValueKind::kAdditive:
      Require(!o.weights_csv.empty(), "additive needs --weights");
      return ValueFunction::Additive(ReadMatrixCsv(o.weights_csv));
    case ValueKind::kSoftplus:
      return ValueFunction::Softplus(
          o.scale, o.weights_csv.empty() ? FeatureMatrix(1, dims, 1.0)
                                         : ReadMatrixCsv(o.weights_csv));
    case ValueKind::kQuadraticCross: {
      if (o.pairwise_mean) return ValueFunction::PairwiseProductMean(n_agents, dims);
      Require(!o.coupling_csv.empty(),
              "quadratic needs --coupling (or --pairwise-mean)");
      FeatureMatrix q = o.weights_csv.empty() ? FeatureMatrix(1, dims, 0.0)
                                              : ReadMatrixCsv(o.weights_csv);
      return ValueFunction::QuadraticCross(std::move(q),
                                           ReadMatrixCsv(o.coupling_csv));
    }
    default:
      Fail(ErrorKind::kUsage, "value function '" + o.name +
                                  "' is not available from the command line");
  }
}

inline std::vector<double> ParseDoubleList(const std::string& s,
                                           const std::string& what) {
  std::vector<double> out;
  for (const auto& cell : detail::SplitCsvLine(s)) {
    if (cell.empty()) continue;
    try {
      out.push_back(detail::ParseDouble(cell, what));
    } catch (const Error& e) {
      Fail(ErrorKind::kUsage, e.what());
    }
  }
  return out;
}

template <typename T>
std::vector<T> ParseIntList(const std::vector<std::string>& cells,
                            const std::string& what) {
  std::vector<T> out;
  for (const auto& c : cells) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(c, &used);
      if (used != c.size()) throw std::invalid_argument(c);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      Fail(ErrorKind::kUsage, what + ": not a nonnegative integer '" + c + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string events;
  std::string topics_cfg;
  std::vector<std::string> keywords;
  std::vector<std::string> excludes;
  std::string followers;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::int64_t step = 86400;
  bool cumulative = false;
};

inline int CmdIngest(const IngestArgs& a, const CommonOptions& common,
                     Manifest& manifest, std::ostream& out, std::ostream& err) {
  IngestOptions opt;
  opt.window_start = a.start;
  opt.window_end = a.end;
  opt.step = a.step;
  opt.cumulative = a.cumulative;
  opt.topic_keywords = a.keywords;
  opt.exclude_patterns = a.excludes;
  std::string canonical;
  if (!a.topics_cfg.empty()) {
    const auto cfg = KeyValueConfig::Load(a.topics_cfg);
    for (auto& k : cfg.GetList("keywords")) opt.topic_keywords.push_back(k);
    for (auto& k : cfg.GetList("exclude")) opt.exclude_patterns.push_back(k);
    canonical = cfg.Canonical();
  }
  if (!a.followers.empty()) opt.follower_snapshot = ReadFollowerSnapshot(a.followers);
  auto is = detail::OpenIn(a.events);
  const auto file = ReadEventsJsonl(is);
  auto report = IngestEvents(file.events, opt);
  report.malformed += file.malformed;
  if (report.malformed > 0) {
    err << "warning: skipped " << report.malformed << " malformed record(s)\n";
  }
  manifest.SetConfig(canonical + fmt::format("start={}\nend={}\nstep={}\ncumulative={}\n",
                                             a.start, a.end, a.step, a.cumulative));
  WritePanelBinary(manifest.Path("panel.asp"), report.panel);
  {
    auto os = detail::OpenOut(manifest.Path("panel.csv"));
    WritePanelCsv(os, report.panel);
  }
  out << fmt::format("panel N={} T={} D={} topic_events={} malformed={} excluded={}\n",
                     report.panel.n_agents(), report.panel.n_steps(),
                     report.panel.n_dims(), report.topic_events, report.malformed,
                     report.excluded_events);
  (void)common;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::size_t n = 1000;
  std::size_t steps = 1;
  std::size_t dims = 3;
  std::string law = "abs_gaussian";
  double alpha = 1.5;
  double rho = 0.0;
};

inline int CmdGenerate(const GenerateArgs& a, const CommonOptions& common,
                       Manifest& manifest, std::ostream& out) {
  SyntheticPanelSpec spec;
  spec.n_agents = a.n;
  spec.n_steps = a.steps;
  spec.n_dims = a.dims;
  spec.feature_law = ParseFeatureLaw(a.law);
  spec.pareto_alpha = a.alpha;
  spec.reach_engagement_correlation = a.rho;
  spec.seed = common.seed;
  const auto panel = GenerateSynthetic(spec);
  manifest.SetConfig(fmt::format("n={}\nsteps={}\ndims={}\nlaw={}\nalpha={}\nrho={}\n",
                                 a.n, a.steps, a.dims, a.law, Num(a.alpha), Num(a.rho)));
  WritePanelBinary(manifest.Path("panel.asp"), panel);
  {
    auto os = detail::OpenOut(manifest.Path("panel.csv"));
    WritePanelCsv(os, panel);
  }
  out << fmt::format("generated N={} T={} D={} law={}\n", a.n, a.steps, a.dims, a.law);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// attribute

struct AttributeArgs {
  std::string panel;
  ValueFnOptions f;
  std::string method = "analytic";
  int K = kDefaultK;
  std::string baseline = "zero";
  std::string baseline_vector;
  std::optional<std::size_t> step;
  std::size_t samples = 200;
  std::string semantics = "restrict";
};

inline bool IsCoalitionMethod(const std::string& m) {
  return m == "loo" || m == "exact_shapley" || m == "sampled_shapley" ||
         m == "exact_banzhaf" || m == "sampled_banzhaf";
}

inline int CmdAttribute(const AttributeArgs& a, const CommonOptions& common,
                        Manifest& manifest, std::ostream& out) {
  Require(a.K >= 1, "--K must be >= 1");
  const FeaturePanel panel = ReadPanelBinary(a.panel);
  const ValueFunction f = BuildValueFunction(a.f, panel.n_agents(), panel.n_dims());
  BaselineSpec baseline{ParseBaselineKind(a.baseline), {}};
  if (baseline.kind == BaselineKind::kCustomVector) {
    baseline.vector = ParseDoubleList(a.baseline_vector, "--baseline-vector");
  }
  std::vector<std::size_t> steps;
  if (a.step) {
    Require(*a.step < panel.n_steps(), "--step out of range");
    steps.push_back(*a.step);
  } else {
    for (std::size_t t = 0; t < panel.n_steps(); ++t) steps.push_back(t);
  }

  const bool coalition = IsCoalitionMethod(a.method);
  AttributionMethod method;
  if (!coalition) {
    if (a.method == "analytic") {
      method = AttributionMethod::Analytic();
      if (baseline.kind != BaselineKind::kZero) {
        Fail(ErrorKind::kUsage,
             "analytic attribution needs --baseline zero; hint: use "
             "--method midpoint for a non-zero baseline");
      }
    } else if (a.method == "midpoint") {
      method = AttributionMethod::Midpoint(a.K);
    } else if (a.method == "permuted") {
      method = AttributionMethod::PermutedPath(a.K, common.seed);
    } else {
      Fail(ErrorKind::kUsage, "unknown --method '" + a.method + "'");
    }
  }
  const CoalitionSemantics sem = a.semantics == "pin" ? CoalitionSemantics::kPin
                                                      : CoalitionSemantics::kRestrict;
  Require(a.semantics == "pin" || a.semantics == "restrict",
          "--semantics must be restrict or pin");

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<AttributionResult> results;
  std::vector<std::vector<double>> std_errors;
  for (std::size_t t : steps) {
    const FeatureMatrix z = panel.Step(t);
    const FeatureMatrix z0 = ResolveTemporalBaseline(baseline, panel, t);
    if (!coalition) {
      if (method.kind == MethodKind::kAnalytic) {
        results.push_back(AttributeAnalytic(f, z, baseline));
      } else {
        results.push_back(AttributePathIntegral(
            f, z, z0, method.K,
            method.kind == MethodKind::kMidpoint ? PathKind::kLinear
                                                 : PathKind::kPermuted,
            method.seed));
      }
      std_errors.emplace_back();
      continue;
    }
    const CoalitionGame game(f, z, sem, z0);
    CoalitionEstimate est;
    if (a.method == "loo") est = LeaveOneOut(game);
    if (a.method == "exact_shapley") est = ExactShapley(game);
    if (a.method == "exact_banzhaf") est = ExactBanzhaf(game);
    if (a.method == "sampled_shapley") {
      est = SampledShapley(game, a.samples, DeriveSeed(common.seed, t), common.threads);
    }
    if (a.method == "sampled_banzhaf") {
      est = SampledBanzhaf(game, a.samples, DeriveSeed(common.seed, t), common.threads);
    }
    AttributionResult r;
    r.phi = est.phi;
    r.delta_v = game.GrandValue() - game.EmptyValue();
    r.baseline = z0;
    results.push_back(std::move(r));
    std_errors.push_back(est.std_error);
  }
  manifest.Time("attribute_seconds", std::chrono::duration<double>(
                                         std::chrono::steady_clock::now() - t0)
                                         .count());

  double worst_residual = 0.0;
  bool ties = false;
  nlohmann::json delta = nlohmann::json::array();
  {
    auto os = detail::OpenOut(manifest.Path("attribution.csv"));
    WriteSchemaLine(os, "attribution.v1");
    os << "agent_id,step,phi,phi_norm";
    if (coalition) os << ",std_error";
    os << '\n';
    for (std::size_t k = 0; k < steps.size(); ++k) {
      auto& r = results[k];
      ties = ties || r.rank_ties;
      delta.push_back(r.delta_v);
      const bool normal = std::abs(r.delta_v) > kDegenerateTolerance;
      if (normal) r = Normalize(std::move(r));
      worst_residual = std::max(worst_residual, r.EfficiencyResidual() /
                                                    std::max(1.0, std::abs(r.delta_v)));
      for (std::size_t i = 0; i < panel.n_agents(); ++i) {
        os << panel.agent_ids()[i] << ',' << steps[k] << ',' << Num(r.phi[i]) << ','
           << (normal ? Num((*r.normalized)[i]) : std::string("nan"));
        if (coalition) {
          os << ',' << (std_errors[k].empty() ? std::string("0") : Num(std_errors[k][i]));
        }
        os << '\n';
      }
    }
  }
  nlohmann::json summary;
  summary["schema"] = "attribution_summary.v1";
  summary["f"] = f.name();
  summary["method"] = coalition ? a.method : method.ToString();
  summary["K"] = coalition ? 0 : method.K;
  summary["baseline"] = std::string(ToString(baseline.kind));
  summary["n_agents"] = panel.n_agents();
  summary["steps"] = steps;
  summary["delta_v"] = delta;
  summary["efficiency_residual"] = worst_residual;
  const bool efficient_method =
      !coalition || a.method == "exact_shapley" || a.method == "sampled_shapley";
  const double tol = coalition ? 1e-9
                     : method.kind == MethodKind::kAnalytic ? 1e-9 : 1e-6;
  summary["efficiency_tolerance"] = efficient_method ? nlohmann::json(tol)
                                                     : nlohmann::json(nullptr);
  summary["gini_rank_ties"] = ties;
  if (coalition) {
    summary["semantics"] = a.semantics;
    summary["samples"] = a.samples;
  }
  {
    auto os = detail::OpenOut(manifest.Path("summary.json"));
    os << summary.dump(2) << '\n';
  }
  manifest.SetConfig(fmt::format("panel={}\nf={}\nmethod={}\nK={}\nbaseline={}\n",
                                 a.panel, f.name(), a.method, a.K, a.baseline));
  out << fmt::format("attributed f={} method={} steps={} efficiency_residual={:.3g}\n",
                     f.name(), summary["method"].get<std::string>(), steps.size(),
                     worst_residual);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// study

inline FeaturePanel StudyPanel(const KeyValueConfig& cfg, std::uint64_t seed) {
  if (cfg.Has("panel")) return ReadPanelBinary(cfg.Get("panel", ""));
  SyntheticPanelSpec spec;
  spec.n_agents = ParseIntList<std::size_t>({cfg.Get("n_agents", "10000")}, "n_agents")[0];
  spec.n_steps = ParseIntList<std::size_t>({cfg.Get("n_steps", "1")}, "n_steps")[0];
  spec.n_dims = ParseIntList<std::size_t>({cfg.Get("n_dims", "3")}, "n_dims")[0];
  spec.feature_law = ParseFeatureLaw(cfg.Get("law", "pareto_reach"));
  spec.pareto_alpha = ParseDoubleList(cfg.Get("pareto_alpha", "1.5"), "pareto_alpha")[0];
  spec.reach_engagement_correlation =
      ParseDoubleList(cfg.Get("correlation", "0.7"), "correlation")[0];
  spec.seed = ParseIntList<std::uint64_t>(
      {cfg.Get("panel_seed", std::to_string(seed))}, "panel_seed")[0];
  return GenerateSynthetic(spec);
}

inline std::vector<std::uint64_t> StudySeeds(const KeyValueConfig& cfg,
                                             std::uint64_t root) {
  if (cfg.Has("seeds")) return ParseIntList<std::uint64_t>(cfg.GetList("seeds"), "seeds");
  const auto count = ParseIntList<std::size_t>({cfg.Get("seed_count", "10")}, "seed_count")[0];
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < count; ++k) seeds.push_back(root + k);
  return seeds;
}

inline AnchorMetric ParseAnchor(const std::string& name) {
  if (name == "followers") return AnchorMetric::Followers();
  if (name == "posts_7d") return AnchorMetric::PostCount(7);
  if (name == "replies_7d") return AnchorMetric::RepliesReceived(7);
  Fail(ErrorKind::kUsage, "unknown anchor '" + name + "'");
}

inline int CmdStudy(const std::string& config_path, const CommonOptions& common,
                    Manifest& manifest, std::ostream& out) {
  const auto cfg = KeyValueConfig::Load(config_path);
  manifest.SetConfig(cfg.Canonical());
  const std::string kind = cfg.Get("study", "flip");
  const FeaturePanel panel = StudyPanel(cfg, common.seed);
  const std::size_t step =
      ParseIntList<std::size_t>({cfg.Get("step", "0")}, "step")[0];
  Require(step < panel.n_steps(), "study: step out of range");
  const FeatureMatrix z = panel.Step(step);
  ValueFnOptions fo;
  fo.scale = ParseDoubleList(cfg.Get("scale", "0.35"), "scale")[0];
  fo.weights_csv = cfg.Get("weights", "");
  fo.coupling_csv = cfg.Get("coupling", "");
  fo.pairwise_mean = cfg.Get("pairwise_mean", "false") == "true";
  std::vector<ValueFunction> fs;
  for (const auto& name : cfg.GetList("functions").empty()
                              ? std::vector<std::string>{"lin", "heat", "var", "gini"}
                              : cfg.GetList("functions")) {
    fo.name = name;
    fs.push_back(BuildValueFunction(fo, panel.n_agents(), panel.n_dims()));
  }
  const int K = ParseIntList<int>({cfg.Get("K", std::to_string(kDefaultK))}, "K")[0];

  if (kind == "flip") {
    std::vector<double> cuts = ParseDoubleList(cfg.Get("cuts", "0.01,0.10,1.0"), "cuts");
    const auto partition = MakeTierPartition(
        panel, ParseAnchor(cfg.Get("anchor", "followers")), cuts);
    FlipConfig fc;
    fc.functions = fs;
    fc.protocols.clear();
    for (const auto& p : cfg.GetList("protocols").empty()
                             ? std::vector<std::string>{"bias_visibility",
                                                        "bias_topic_x_follow",
                                                        "bias_topic_top", "random"}
                             : cfg.GetList("protocols")) {
      fc.protocols.push_back(ParseSubsetProtocol(p));
    }
    fc.sizes = cfg.GetList("sizes").empty()
                   ? std::vector<std::size_t>{100}
                   : ParseIntList<std::size_t>(cfg.GetList("sizes"), "sizes");
    fc.seeds = StudySeeds(cfg, common.seed);
    for (auto s : fc.seeds) manifest.AddSeed(s);
    fc.subset.pool_fraction =
        ParseDoubleList(cfg.Get("pool_fraction", "0.05"), "pool_fraction")[0];
    fc.subset.pool_size =
        ParseIntList<std::size_t>({cfg.Get("pool_size", "5000")}, "pool_size")[0];
    fc.method = cfg.Get("method", "analytic") == "analytic"
                    ? AttributionMethod::Analytic()
                    : AttributionMethod::Midpoint(K);
    if (fc.method.kind == MethodKind::kAnalytic) fc.method.K = K;
    fc.threads = common.threads;
    const auto metrics = ComputeAgentMetrics(panel);
    const auto report = FlipStudy(z, metrics, partition, fc);
    const auto& groups = report.group_names;
    {
      auto os = detail::OpenOut(manifest.Path("flip_cells.csv"));
      WriteSchemaLine(os, "flip_cells.v1");
      os << "protocol,f,n,seed,degenerate,top_members";
      for (const auto& g : groups) os << ",share_" << g;
      os << ",epsilon,c_star,spearman\n";
      for (const auto& c : report.cells) {
        os << ToString(c.protocol) << ',' << c.f_name << ',' << c.n << ',' << c.seed
           << ',' << (c.degenerate ? 1 : 0) << ',' << c.top_members;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          os << ',' << (c.degenerate ? std::string("nan") : Num(c.shares[g]));
        }
        os << ',' << Num(c.epsilon) << ',' << Num(c.c_star) << ',' << Num(c.spearman)
           << '\n';
      }
    }
    {
      auto os = detail::OpenOut(manifest.Path("flip_summary.csv"));
      WriteSchemaLine(os, "flip_summary.v1");
      os << "protocol,f,n,n_valid,n_degenerate,mean_top_members";
      for (const auto& g : groups) {
        os << ",share_" << g << ",std_" << g << ",full_" << g << ",delta_pp_" << g;
      }
      os << '\n';
      for (const auto& a : report.aggregates) {
        os << ToString(a.protocol) << ',' << a.f_name << ',' << a.n << ',' << a.n_valid
           << ',' << a.n_degenerate << ',' << Num(a.mean_top_members);
        for (std::size_t g = 0; g < groups.size(); ++g) {
          os << ',' << Num(a.mean_shares[g]) << ',' << Num(a.std_shares[g]) << ','
             << Num(a.full_shares[g]) << ','
             << Num(100.0 * (a.mean_shares[g] - a.full_shares[g]));
        }
        os << '\n';
      }
    }
    {
      auto os = detail::OpenOut(manifest.Path("rescale_summary.csv"));
      WriteSchemaLine(os, "rescale_summary.v1");
      os << "protocol,f,n,n_valid,mean_epsilon,mean_spearman\n";
      for (const auto& a : report.aggregates) {
        os << ToString(a.protocol) << ',' << a.f_name << ',' << a.n << ',' << a.n_valid
           << ',' << Num(a.mean_epsilon) << ',' << Num(a.mean_spearman) << '\n';
      }
    }
    out << fmt::format("flip study: {} cells, {} aggregate rows\n", report.cells.size(),
                       report.aggregates.size());
    return kExitOk;
  }

  if (kind == "kconv") {
    const auto ks = ParseIntList<int>(
        cfg.GetList("ks").empty()
            ? std::vector<std::string>{"5", "10", "20", "30", "50", "100", "300"}
            : cfg.GetList("ks"),
        "ks");
    auto os = detail::OpenOut(manifest.Path("kconv.csv"));
    WriteSchemaLine(os, "kconv.v1");
    os << "f,K,rel_l1,ratio_to_next\n";
    for (const auto& f : fs) {
      const auto rows = KConvergenceSweep(f, z, ks);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const double ratio = k + 1 < rows.size() && rows[k + 1].rel_l1 > 0
                                 ? rows[k].rel_l1 / rows[k + 1].rel_l1
                                 : std::nan("");
        os << f.name() << ',' << rows[k].K << ',' << Num(rows[k].rel_l1) << ','
           << Num(ratio) << '\n';
        manifest.Time(fmt::format("kconv_{}_K{}", f.name(), rows[k].K), rows[k].seconds);
      }
    }
    out << "kconv study written\n";
    return kExitOk;
  }

  if (kind == "deletion") {
    const std::size_t k_max = ParseIntList<std::size_t>(
        {cfg.Get("k_max", std::to_string(std::max<std::size_t>(1, panel.n_agents() / 10)))},
        "k_max")[0];
    const std::size_t trials =
        ParseIntList<std::size_t>({cfg.Get("random_trials", "100")}, "random_trials")[0];
    std::vector<FeatureMatrix> slices;
    for (std::size_t t = 0; t < panel.n_steps(); ++t) slices.push_back(panel.Step(t));
    auto os = detail::OpenOut(manifest.Path("deletion.csv"));
    WriteSchemaLine(os, "deletion.v1");
    os << "f,target_step,k,drop,auc,random_auc\n";
    for (const auto& f : fs) {
      const auto res = DeletionFaithfulness(f, slices, k_max, {}, K);
      const double rnd = RandomDeletionAuc(f, slices, k_max, trials, common.seed);
      for (std::size_t k = 0; k < res.drops.size(); ++k) {
        os << f.name() << ',' << res.target_step << ',' << (k + 1) << ','
           << Num(res.drops[k]) << ',' << Num(res.auc) << ',' << Num(rnd) << '\n';
      }
    }
    out << "deletion study written\n";
    return kExitOk;
  }

  if (kind == "baseline_ablation") {
    auto os = detail::OpenOut(manifest.Path("baseline_ablation.csv"));
    WriteSchemaLine(os, "baseline_ablation.v1");
    os << "f,comparison,kendall_tau,spearman_rho,jaccard_top10\n";
    for (const auto& f : fs) {
      const auto zero = AttributePathIntegral(f, z, BaselineSpec::Zero(), K);
      const auto mean = AttributePathIntegral(f, z, BaselineSpec::PopulationMean(), K);
      const auto ra = CompareRankings(zero.phi, mean.phi, 10);
      os << f.name() << ",zero_vs_population_mean," << Num(ra.kendall_tau) << ','
         << Num(ra.spearman_rho) << ',' << Num(ra.jaccard_top_k) << '\n';
      const auto perm = AttributePathIntegral(f, z, BaselineSpec::Zero(), K,
                                              PathKind::kPermuted, common.seed);
      const auto rp = CompareRankings(zero.phi, perm.phi, 10);
      os << f.name() << ",linear_vs_permuted_path," << Num(rp.kendall_tau) << ','
         << Num(rp.spearman_rho) << ',' << Num(rp.jaccard_top_k) << '\n';
    }
    out << "baseline ablation written\n";
    return kExitOk;
  }

  Fail(ErrorKind::kUsage, "unknown study kind '" + kind +
                              "' (flip, kconv, deletion, baseline_ablation)");
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string config;
  std::string f = "heat";
  std::vector<std::size_t> sizes;
  std::vector<std::string> methods;
  std::size_t samples = 1000;
  int repeats = 3;
  int K = kDefaultK;
  double max_work = 4e9;
};

inline int CmdBench(const BenchArgs& a, const CommonOptions& common,
                    Manifest& manifest, std::ostream& out) {
  BenchConfig bc;
  std::string f = a.f;
  std::vector<std::size_t> sizes = a.sizes;
  std::vector<std::string> methods = a.methods;
  std::size_t samples = a.samples;
  int repeats = a.repeats;
  int K = a.K;
  if (!a.config.empty()) {
    const auto cfg = KeyValueConfig::Load(a.config);
    manifest.SetConfig(cfg.Canonical());
    f = cfg.Get("f", f);
    if (cfg.Has("sizes")) sizes = ParseIntList<std::size_t>(cfg.GetList("sizes"), "sizes");
    if (cfg.Has("methods")) methods = cfg.GetList("methods");
    samples = ParseIntList<std::size_t>({cfg.Get("samples", std::to_string(samples))},
                                        "samples")[0];
    repeats = ParseIntList<int>({cfg.Get("repeats", std::to_string(repeats))}, "repeats")[0];
    K = ParseIntList<int>({cfg.Get("K", std::to_string(K))}, "K")[0];
  }
  bc.f = ParseValueKind(f);
  Require(ValueFunction::FromKind(bc.f).HasAnalyticAttribution(),
          "bench supports lin, heat, var and gini");
  if (!sizes.empty()) bc.sizes = sizes;
  bc.methods.clear();
  for (const auto& m : methods.empty() ? std::vector<std::string>{"ours_analytic"} : methods) {
    bc.methods.push_back(ParseBenchMethod(m));
  }
  bc.m_samples = samples;
  bc.repeats = repeats;
  bc.K = K;
  bc.seed = common.seed;
  bc.max_work = a.max_work;
  const auto rows = BenchScaling(bc);
  auto os = detail::OpenOut(manifest.Path("bench.csv"));
  WriteSchemaLine(os, "bench.v1");
  os << "method,n,status,seconds\n";
  for (const auto& r : rows) {
    os << ToString(r.method) << ',' << r.n << ',' << r.status << ','
       << (r.status == "ok" ? fmt::format("{:.6e}", r.seconds) : std::string("nan")) << '\n';
    out << fmt::format("{:<16} n={:<8} {}\n", ToString(r.method), r.n,
                       r.status == "ok" ? fmt::format("{:.3e} s", r.seconds) : r.status);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Counterexample rationals plus a small axiom sweep.
inline std::vector<VerifyLine> RunVerification(std::uint64_t seed) {
  std::vector<VerifyLine> lines;
  auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };
  {
    const auto r = CounterexampleCheck();
    double worst = 0.0;
    auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    const double want_phi[3] = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 9.0};
    const double want_share[3] = {0.3, 0.3, 0.4};
    for (int i = 0; i < 3; ++i) {
      track(r.phi_full[i], want_phi[i]);
      track(r.shares_full[i], want_share[i]);
      track(r.phi_full_shapley[i], want_phi[i]);
    }
    track(r.delta_v_full, 5.0 / 9.0);
    track(r.delta_v_subset, 0.5);
    for (int i = 0; i < 2; ++i) {
      track(r.phi_subset[i], 0.25);
      track(r.shares_subset[i], 0.5);
    }
    track(r.implied_c[0], 5.0 / 3.0);
    track(r.implied_c[1], 5.0 / 4.0);
    double path = 0.0;
    for (int i = 0; i < 3; ++i) path = std::max(path, std::abs(r.phi_full_path[i] - want_phi[i]));
    for (int i = 0; i < 2; ++i) path = std::max(path, std::abs(r.phi_subset_path[i] - 0.25));
    lines.push_back({"counterexample_rationals", worst <= 1e-12,
                     fmt::format("max abs error {:.3g}", worst)});
    lines.push_back({"counterexample_no_common_scale",
                     !close(r.implied_c[0], r.implied_c[1], 1e-6) && r.rescale.epsilon > 0,
                     fmt::format("c1={:.6f} c3={:.6f} eps={:.4g}", r.implied_c[0],
                                 r.implied_c[1], r.rescale.epsilon)});
    lines.push_back({"counterexample_path_K300", path <= 1e-9,
                     fmt::format("max abs error {:.3g}", path)});
  }
  std::mt19937_64 rng(seed);
  double eff = 0.0;
  double sym = 0.0;
  double null_phi = 0.0;
  double lin = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    SyntheticPanelSpec spec;
    spec.n_agents = 5 + rng() % 40;
    spec.seed = rng();
    FeatureMatrix z = GenerateSynthetic(spec).Step(0);
    for (std::size_t d = 0; d < z.cols(); ++d) {
      z(1, d) = z(0, d);
      z(2, d) = 0.0;
    }
    for (ValueKind k : {ValueKind::kLin, ValueKind::kHeat, ValueKind::kVar, ValueKind::kGini}) {
      const auto f = ValueFunction::FromKind(k);
      const auto r = AttributeAnalytic(f, z);
      eff = std::max(eff, r.EfficiencyResidual() / std::max(1.0, std::abs(r.delta_v)));
      sym = std::max(sym, std::abs(r.phi[0] - r.phi[1]));
      null_phi = std::max(null_phi, std::abs(r.phi[2]));
    }
    const auto f1 = ValueFunction::Var();
    const auto f2 = ValueFunction::Heat();
    const double al = 0.7;
    const double be = -1.3;
    CustomCallbacks cb;
    cb.evaluate = [&](const FeatureMatrix& x) {
      return al * f1.Evaluate(x) + be * f2.Evaluate(x);
    };
    cb.gradient = [&](const FeatureMatrix& x) {
      auto g1 = f1.Gradient(x).grad;
      const auto g2 = f2.Gradient(x).grad;
      for (std::size_t e = 0; e < g1.values().size(); ++e) {
        g1.values()[e] = al * g1.values()[e] + be * g2.values()[e];
      }
      return g1;
    };
    const auto combo = ValueFunction::Custom(cb, "combo");
    const auto p1 = AttributePathIntegral(f1, z, BaselineSpec::Zero(), 30).phi;
    const auto p2 = AttributePathIntegral(f2, z, BaselineSpec::Zero(), 30).phi;
    const auto pc = AttributePathIntegral(combo, z, BaselineSpec::Zero(), 30).phi;
    for (std::size_t i = 0; i < pc.size(); ++i) {
      lin = std::max(lin, std::abs(pc[i] - (al * p1[i] + be * p2[i])));
    }
  }
  lines.push_back({"axiom_efficiency", eff <= 1e-9, fmt::format("max rel residual {:.3g}", eff)});
  lines.push_back({"axiom_symmetry", sym <= 1e-12, fmt::format("max |phi_i - phi_j| {:.3g}", sym)});
  lines.push_back({"axiom_null_agent", null_phi == 0.0,
                   fmt::format("max |phi| of zero rows {:.3g}", null_phi)});
  lines.push_back({"axiom_linearity", lin <= 1e-12, fmt::format("max deviation {:.3g}", lin)});
  return lines;
}

inline int CmdVerify(const CommonOptions& common, Manifest& manifest,
                     std::ostream& out) {
  const auto lines = RunVerification(common.seed);
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& l : lines) {
    out << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << '\n';
    ok = ok && l.pass;
    j.push_back({{"check", l.name}, {"pass", l.pass}, {"detail", l.detail}});
  }
  auto os = detail::OpenOut(manifest.Path("verify.json"));
  os << j.dump(2) << '\n';
  return ok ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------

inline void AddCommon(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--seed", c.seed, "Root random seed");
  sub->add_option("--out-dir,--out", c.out_dir, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
}

inline int RunCli(const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  CLI::App app{"Aumann-Shapley attribution for multi-agent feature panels", "asattr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonOptions common;
  IngestArgs ingest;
  GenerateArgs gen;
  AttributeArgs attr;
  BenchArgs bench;
  std::string study_config;

  auto* c_ingest = app.add_subcommand("ingest", "Build a panel from a JSONL event file");
  c_ingest->add_option("--events", ingest.events, "JSONL event file")->required();
  c_ingest->add_option("--topics", ingest.topics_cfg, "key=value file with keywords/exclude");
  c_ingest->add_option("--keyword", ingest.keywords, "Topic keyword (repeatable)");
  c_ingest->add_option("--exclude", ingest.excludes, "Actor exclusion regex (repeatable)");
  c_ingest->add_option("--followers", ingest.followers, "actor,count snapshot CSV");
  c_ingest->add_option("--start", ingest.start, "Window start (UTC seconds)")->required();
  c_ingest->add_option("--end", ingest.end, "Window end, exclusive")->required();
  c_ingest->add_option("--step", ingest.step, "Step length in seconds");
  c_ingest->add_flag("--cumulative", ingest.cumulative, "Running totals for activity/resonance");
  AddCommon(c_ingest, common);

  auto* c_gen = app.add_subcommand("generate", "Write a synthetic panel");
  c_gen->add_option("--n", gen.n, "Agents")->check(CLI::PositiveNumber);
  c_gen->add_option("--steps", gen.steps, "Steps")->check(CLI::PositiveNumber);
  c_gen->add_option("--dims", gen.dims, "Feature dims")->check(CLI::PositiveNumber);
  c_gen->add_option("--law", gen.law, "uniform_pm1 | abs_gaussian | pareto_reach");
  c_gen->add_option("--alpha", gen.alpha, "Pareto tail index");
  c_gen->add_option("--correlation", gen.rho, "Reach-engagement copula correlation");
  AddCommon(c_gen, common);

  auto* c_attr = app.add_subcommand("attribute", "Attribute a value function over a panel");
  c_attr->add_option("--panel", attr.panel, "ASP1 panel file")->required();
  c_attr->add_option("--f", attr.f.name, "lin | heat | var | gini | additive | quadratic | softplus");
  c_attr->add_option("--weights", attr.f.weights_csv, "W (additive/softplus) or Q (quadratic) CSV");
  c_attr->add_option("--coupling", attr.f.coupling_csv, "Quadratic coupling CSV (N x N)");
  c_attr->add_option("--scale", attr.f.scale, "Softplus scale a");
  c_attr->add_flag("--pairwise-mean", attr.f.pairwise_mean,
                   "Quadratic: (1/n^2) sum_{i<j} s_i s_j");
  c_attr->add_option("--method", attr.method,
                     "analytic | midpoint | permuted | loo | exact_shapley | "
                     "sampled_shapley | exact_banzhaf | sampled_banzhaf");
  c_attr->add_option("--K", attr.K, "Midpoint points");
  c_attr->add_option("--baseline", attr.baseline,
                     "zero | population_mean | first_step | custom");
  c_attr->add_option("--baseline-vector", attr.baseline_vector, "Comma-separated z0 (custom)");
  c_attr->add_option("--step", attr.step, "Only this step");
  c_attr->add_option("--samples", attr.samples, "Samples for sampled coalition methods");
  c_attr->add_option("--semantics", attr.semantics, "Coalition semantics: restrict | pin");
  AddCommon(c_attr, common);

  auto* c_study = app.add_subcommand("study", "Run a study from a key=value config");
  c_study->add_option("config", study_config, "Study config file")->required();
  AddCommon(c_study, common);

  auto* c_bench = app.add_subcommand("bench", "Wall-clock scaling benchmark");
  c_bench->add_option("--config", bench.config, "key=value bench config");
  c_bench->add_option("--f", bench.f, "lin | heat | var | gini");
  c_bench->add_option("--sizes", bench.sizes, "Agent counts, ascending")->delimiter(',');
  c_bench->add_option("--methods", bench.methods, "Methods")->delimiter(',');
  c_bench->add_option("--samples", bench.samples, "Samples for sampled methods");
  c_bench->add_option("--repeats", bench.repeats, "Timing repeats");
  c_bench->add_option("--K", bench.K, "Midpoint points");
  c_bench->add_option("--max-work", bench.max_work, "Skip cells estimated above this work");
  AddCommon(c_bench, common);

  auto* c_verify = app.add_subcommand("verify", "Counterexample and axiom self-check");
  AddCommon(c_verify, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  // CLI11 leaves the help-on-no-subcommand case to require_subcommand.
  std::vector<std::string> argv = {"asattr"};
  argv.insert(argv.end(), args.begin(), args.end());
  const std::string name = app.get_subcommands().front()->get_name();
  Manifest manifest(name, argv, common);
  manifest.AddSeed(common.seed);
  int code = kExitOk;
  try {
    if (name == "ingest") code = CmdIngest(ingest, common, manifest, out, err);
    if (name == "generate") code = CmdGenerate(gen, common, manifest, out);
    if (name == "attribute") code = CmdAttribute(attr, common, manifest, out);
    if (name == "study") code = CmdStudy(study_config, common, manifest, out);
    if (name == "bench") code = CmdBench(bench, common, manifest, out);
    if (name == "verify") code = CmdVerify(common, manifest, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  manifest.Write();
  return code;
}

inline int RunCli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return RunCli(args, std::cout, std::cerr);
}

}  // namespace asattr::cli
