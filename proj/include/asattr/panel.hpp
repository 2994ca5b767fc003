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

// Feature panels: an N x T x D tensor of nonnegative per-agent features, plus
// the machinery that produces them (event ingestion, synthetic generation) and
// the tier partition used to group agents.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "asattr/core.hpp"

namespace asattr {

inline const std::vector<std::string>& DefaultDimNames() {
  static const std::vector<std::string> names = {"reach", "activity",
                                                 "resonance"};
  return names;
}

class FeaturePanel {
 public:
  FeaturePanel() = default;

  // `values` is indexed ((agent * n_steps) + step) * n_dims + dim.
  FeaturePanel(std::size_t n_agents, std::size_t n_steps, std::size_t n_dims,
               std::vector<double> values, std::vector<std::string> agent_ids,
               std::vector<std::string> dim_names = {})
      : n_agents_(n_agents),
        n_steps_(n_steps),
        n_dims_(n_dims),
        values_(std::move(values)),
        agent_ids_(std::move(agent_ids)),
        dim_names_(std::move(dim_names)) {
    Require(n_agents_ > 0 && n_steps_ > 0 && n_dims_ > 0,
            "FeaturePanel: N, T and D must be positive");
    Require(values_.size() == n_agents_ * n_steps_ * n_dims_,
            "FeaturePanel: payload size does not match N*T*D");
    Require(agent_ids_.size() == n_agents_,
            "FeaturePanel: need one id per agent");
    if (dim_names_.empty()) {
      for (std::size_t d = 0; d < n_dims_; ++d) {
        dim_names_.push_back(d < DefaultDimNames().size()
                                 ? DefaultDimNames()[d]
                                 : "dim" + std::to_string(d));
      }
    }
    Require(dim_names_.size() == n_dims_, "FeaturePanel: need one name per dim");
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) {
        Fail(ErrorKind::kData,
             "FeaturePanel: entries must be finite and nonnegative");
      }
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& id : agent_ids_) {
      if (!seen.insert(id).second) {
        Fail(ErrorKind::kData, "FeaturePanel: duplicate agent id '" + id + "'");
      }
    }
  }

  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t n_dims() const noexcept { return n_dims_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& agent_ids() const noexcept {
    return agent_ids_;
  }
  const std::vector<std::string>& dim_names() const noexcept {
    return dim_names_;
  }

  double at(std::size_t agent, std::size_t step, std::size_t dim) const {
    return values_[(agent * n_steps_ + step) * n_dims_ + dim];
  }

  // N x D slice at `step`.
  FeatureMatrix Step(std::size_t step) const {
    Require(step < n_steps_, "FeaturePanel::Step: step out of range");
    FeatureMatrix m(n_agents_, n_dims_);
    for (std::size_t i = 0; i < n_agents_; ++i) {
      for (std::size_t d = 0; d < n_dims_; ++d) m(i, d) = at(i, step, d);
    }
    return m;
  }

  // |agents| x D slice at `step`, rows in the order given.
  FeatureMatrix Step(std::size_t step,
                     std::span<const std::size_t> agents) const {
    Require(step < n_steps_, "FeaturePanel::Step: step out of range");
    FeatureMatrix m(agents.size(), n_dims_);
    for (std::size_t r = 0; r < agents.size(); ++r) {
      Require(agents[r] < n_agents_, "FeaturePanel::Step: agent out of range");
      for (std::size_t d = 0; d < n_dims_; ++d) m(r, d) = at(agents[r], step, d);
    }
    return m;
  }

  friend bool operator==(const FeaturePanel&, const FeaturePanel&) = default;

 private:
  std::size_t n_agents_ = 0;
  std::size_t n_steps_ = 0;
  std::size_t n_dims_ = 0;
  std::vector<double> values_;
  std::vector<std::string> agent_ids_;
  std::vector<std::string> dim_names_;
};

// Zero-padded ids so that lexicographic order equals numeric order.
inline std::vector<std::string> SequentialAgentIds(std::size_t n) {
  const std::size_t width = std::to_string(n == 0 ? 0 : n - 1).size();
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i);
    ids[i] = "a" + std::string(width - num.size(), '0') + num;
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Event ingestion

enum class EventKind { kPost, kReply, kRepost, kFollow };

inline std::optional<EventKind> ParseEventKind(std::string_view s) {
  if (s == "post") return EventKind::kPost;
  if (s == "reply") return EventKind::kReply;
  if (s == "repost") return EventKind::kRepost;
  if (s == "follow") return EventKind::kFollow;
  return std::nullopt;
}

inline std::string_view ToString(EventKind k) {
  switch (k) {
    case EventKind::kPost: return "post";
    case EventKind::kReply: return "reply";
    case EventKind::kRepost: return "repost";
    case EventKind::kFollow: return "follow";
  }
  return "?";
}

struct EventRecord {
  std::int64_t ts = 0;  // UTC seconds
  std::string actor;
  EventKind kind = EventKind::kPost;
  std::optional<std::string> text;
  // Parent record id for reply/repost, followed actor for follow.
  std::optional<std::string> target;
  // Record id, so that replies and reposts can name their parent.
  std::optional<std::string> id;

  bool Valid() const {
    if (actor.empty()) return false;
    if ((kind == EventKind::kFollow || kind == EventKind::kReply) &&
        (!target || target->empty())) {
      return false;
    }
    return true;
  }

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct IngestOptions {
  std::vector<std::string> topic_keywords;  // case-insensitive; empty = all
  std::int64_t window_start = 0;            // inclusive
  std::int64_t window_end = 0;              // exclusive
  std::int64_t step = 86400;
  // Activity/resonance as running totals within the window instead of
  // per-step counts.
  bool cumulative = false;
  // Actors matching any of these (ECMAScript, searched) are dropped.
  std::vector<std::string> exclude_patterns;
  // Follower counts at window start; replaces pre-window follow events for
  // the actors it lists.
  std::unordered_map<std::string, double> follower_snapshot;
};

struct IngestReport {
  FeaturePanel panel;
  std::size_t malformed = 0;        // records skipped as invalid
  std::size_t excluded_events = 0;  // records dropped by exclude patterns
  std::size_t topic_events = 0;     // matching posts + reposts in the window
};

namespace detail {

inline std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace detail

inline IngestReport IngestEvents(std::span<const EventRecord> stream,
                                 const IngestOptions& opt) {
  Require(opt.window_end > opt.window_start, "ingest: empty window");
  Require(opt.step > 0, "ingest: step must be positive");
  const std::int64_t span = opt.window_end - opt.window_start;
  Require(span % opt.step == 0, "ingest: step must divide the window");
  const std::size_t n_steps = static_cast<std::size_t>(span / opt.step);

  IngestReport report;
  std::vector<std::regex> excludes;
  for (const auto& p : opt.exclude_patterns) {
    try {
      excludes.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
      Fail(ErrorKind::kUsage, "ingest: bad exclude pattern '" + p + "'");
    }
  }
  std::vector<std::string> keywords;
  for (const auto& k : opt.topic_keywords) {
    if (!k.empty()) keywords.push_back(detail::Lower(k));
  }
  auto matches = [&](const std::optional<std::string>& text) {
    if (keywords.empty()) return true;
    if (!text) return false;
    const std::string lower = detail::Lower(*text);
    return std::any_of(keywords.begin(), keywords.end(), [&](const auto& k) {
      return lower.find(k) != std::string::npos;
    });
  };

  // Canonical order makes every downstream pass independent of input order.
  std::vector<const EventRecord*> events;
  events.reserve(stream.size());
  for (const auto& e : stream) {
    if (!e.Valid()) {
      ++report.malformed;
      continue;
    }
    if (std::any_of(excludes.begin(), excludes.end(), [&](const auto& re) {
          return std::regex_search(e.actor, re);
        })) {
      ++report.excluded_events;
      continue;
    }
    events.push_back(&e);
  }
  auto key = [](const EventRecord* e) {
    return std::tie(e->ts, e->kind, e->actor, e->target, e->id, e->text);
  };
  std::sort(events.begin(), events.end(),
            [&](const EventRecord* a, const EventRecord* b) {
              return key(a) < key(b);
            });

  auto in_window = [&](std::int64_t ts) {
    return ts >= opt.window_start && ts < opt.window_end;
  };
  auto step_of = [&](std::int64_t ts) {
    return static_cast<std::size_t>((ts - opt.window_start) / opt.step);
  };

  std::map<std::string, std::size_t> agent_slot;
  for (const EventRecord* e : events) {
    if (in_window(e->ts)) agent_slot.emplace(e->actor, 0);
  }
  if (agent_slot.empty()) {
    Fail(ErrorKind::kData, "empty panel: no events inside the window");
  }
  std::vector<std::string> ids;
  ids.reserve(agent_slot.size());
  for (auto& [id, slot] : agent_slot) {
    slot = ids.size();
    ids.push_back(id);
  }
  const std::size_t n = ids.size();

  // Topic-matching parents, by record id: first occurrence wins.
  struct Parent {
    std::string author;
    bool topic = false;
  };
  std::unordered_map<std::string, Parent> parents;
  for (const EventRecord* e : events) {
    if (e->id && e->kind != EventKind::kFollow) {
      parents.emplace(*e->id, Parent{e->actor, false});
    }
  }
  // A repost without text inherits its parent's match, so resolve posts first.
  for (const EventRecord* e : events) {
    if (e->id && e->kind == EventKind::kPost) parents[*e->id].topic = matches(e->text);
  }
  auto repost_matches = [&](const EventRecord& e) {
    if (e.text) return matches(e.text);
    if (e.target) {
      auto it = parents.find(*e.target);
      if (it != parents.end()) return it->second.topic;
    }
    return matches(std::nullopt);
  };
  for (const EventRecord* e : events) {
    if (e->id && e->kind == EventKind::kRepost) {
      parents[*e->id].topic = repost_matches(*e);
    }
  }

  std::vector<double> base_followers(n, 0.0);
  std::vector<double> follows_in(n * n_steps, 0.0);  // new followers per step
  std::vector<double> activity(n * n_steps, 0.0);
  std::vector<double> resonance(n * n_steps, 0.0);
  for (const auto& [actor, count] : opt.follower_snapshot) {
    auto it = agent_slot.find(actor);
    if (it != agent_slot.end()) base_followers[it->second] = count;
  }

  for (const EventRecord* e : events) {
    switch (e->kind) {
      case EventKind::kFollow: {
        auto it = agent_slot.find(*e->target);
        if (it == agent_slot.end()) break;
        if (e->ts < opt.window_start) {
          if (!opt.follower_snapshot.contains(*e->target)) {
            base_followers[it->second] += 1.0;
          }
        } else if (in_window(e->ts)) {
          follows_in[it->second * n_steps + step_of(e->ts)] += 1.0;
        }
        break;
      }
      case EventKind::kPost:
      case EventKind::kRepost: {
        if (!in_window(e->ts)) break;
        const bool hit =
            e->kind == EventKind::kPost ? matches(e->text) : repost_matches(*e);
        if (!hit) break;
        activity[agent_slot.at(e->actor) * n_steps + step_of(e->ts)] += 1.0;
        ++report.topic_events;
        break;
      }
      case EventKind::kReply: {
        if (!in_window(e->ts)) break;
        auto p = parents.find(*e->target);
        if (p == parents.end() || !p->second.topic) break;
        auto author = agent_slot.find(p->second.author);
        if (author == agent_slot.end()) break;
        resonance[author->second * n_steps + step_of(e->ts)] += 1.0;
        break;
      }
    }
  }
  if (report.topic_events == 0) {
    Fail(ErrorKind::kData, "empty panel: no topic-matching posts in the window");
  }

  std::vector<double> values(n * n_steps * 3);
  for (std::size_t i = 0; i < n; ++i) {
    double followers = base_followers[i];
    double act = 0.0;
    double res = 0.0;
    for (std::size_t t = 0; t < n_steps; ++t) {
      const std::size_t k = i * n_steps + t;
      if (opt.cumulative) {
        act += activity[k];
        res += resonance[k];
      } else {
        act = activity[k];
        res = resonance[k];
      }
      // Reach is the count at step start; this step's follows land next step.
      values[k * 3 + 0] = std::log1p(followers);
      values[k * 3 + 1] = std::log1p(act);
      values[k * 3 + 2] = std::log1p(res);
      followers += follows_in[k];
    }
  }
  report.panel = FeaturePanel(n, n_steps, 3, std::move(values), std::move(ids));
  return report;
}

// ---------------------------------------------------------------------------
// Per-agent window-level metrics recovered from a (log1p) panel.

struct AgentMetrics {
  std::vector<double> followers;        // expm1(reach) at the first step
  std::vector<double> topic_posts;      // sum_t expm1(activity)
  std::vector<double> replies_received; // sum_t expm1(resonance)

  std::size_t size() const { return followers.size(); }
};

// Counts over the first `steps` steps (all steps when 0).
inline AgentMetrics ComputeAgentMetrics(const FeaturePanel& panel,
                                        std::size_t steps = 0) {
  const std::size_t n = panel.n_agents();
  const std::size_t t_end =
      steps == 0 ? panel.n_steps() : std::min(steps, panel.n_steps());
  AgentMetrics m;
  m.followers.resize(n);
  m.topic_posts.assign(n, 0.0);
  m.replies_received.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.followers[i] = std::expm1(panel.at(i, 0, 0));
    for (std::size_t t = 0; t < t_end; ++t) {
      if (panel.n_dims() > 1) m.topic_posts[i] += std::expm1(panel.at(i, t, 1));
      if (panel.n_dims() > 2) {
        m.replies_received[i] += std::expm1(panel.at(i, t, 2));
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tier partition

struct TierPartition {
  std::vector<std::size_t> labels;  // group index per agent, 0 = highest tier
  std::vector<std::string> group_names;
  std::string anchor_metric;
  std::vector<double> cut_fractions;

  std::size_t n_groups() const { return group_names.size(); }

  std::size_t GroupSize(std::size_t g) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), g));
  }

  std::vector<std::size_t> Members(std::size_t g) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == g) out.push_back(i);
    }
    return out;
  }
};

struct AnchorMetric {
  std::string name;
  std::function<std::vector<double>(const FeaturePanel&)> scores;

  static AnchorMetric Followers() {
    return {"followers", [](const FeaturePanel& p) {
              return ComputeAgentMetrics(p).followers;
            }};
  }
  static AnchorMetric PostCount(std::size_t days = 7) {
    return {"posts_" + std::to_string(days) + "d", [days](const FeaturePanel& p) {
              return ComputeAgentMetrics(p, days).topic_posts;
            }};
  }
  static AnchorMetric RepliesReceived(std::size_t days = 7) {
    return {"replies_" + std::to_string(days) + "d",
            [days](const FeaturePanel& p) {
              return ComputeAgentMetrics(p, days).replies_received;
            }};
  }
};

inline std::vector<std::string> DefaultGroupNames(std::size_t groups) {
  if (groups == 3) return {"top", "mid", "tail"};
  std::vector<std::string> names;
  for (std::size_t g = 0; g < groups; ++g) names.push_back("g" + std::to_string(g));
  return names;
}

// Ranks agents by descending score (ties by id) and slices the ranking at
// cumulative fractions of N.
inline TierPartition MakeTierPartition(std::span<const double> scores,
                                       std::span<const std::string> agent_ids,
                                       std::vector<double> cut_fractions = {0.01, 0.10, 1.00},
                                       std::string anchor_name = "custom",
                                       std::vector<std::string> group_names = {}) {
  const std::size_t n = scores.size();
  const std::size_t groups = cut_fractions.size();
  Require(agent_ids.size() == n, "tier partition: ids/scores size mismatch");
  Require(groups >= 1, "tier partition: need at least one cut");
  for (std::size_t k = 0; k < groups; ++k) {
    Require(cut_fractions[k] > 0.0 &&
                (k == 0 || cut_fractions[k] > cut_fractions[k - 1]),
            "tier partition: cut fractions must be strictly increasing");
  }
  Require(cut_fractions.back() == 1.0, "tier partition: last cut must be 1.0");
  if (n < groups) {
    Fail(ErrorKind::kUsage, "tier partition: fewer agents than groups");
  }
  if (group_names.empty()) group_names = DefaultGroupNames(groups);
  Require(group_names.size() == groups, "tier partition: one name per group");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return agent_ids[a] < agent_ids[b];
  });

  // Boundaries at ceil(fraction * N); values within 1e-9 of an integer are
  // taken as that integer. Every group keeps at least one agent.
  std::vector<std::size_t> bound(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    const double x = cut_fractions[k] * static_cast<double>(n);
    const double r = std::round(x);
    std::size_t b = std::abs(x - r) <= 1e-9 * std::max(1.0, x)
                        ? static_cast<std::size_t>(r)
                        : static_cast<std::size_t>(std::ceil(x));
    const std::size_t lo = (k == 0 ? 0 : bound[k - 1]) + 1;
    const std::size_t hi = n - (groups - 1 - k);
    bound[k] = std::clamp(b, lo, hi);
  }

  TierPartition part;
  part.labels.assign(n, 0);
  std::size_t g = 0;
  for (std::size_t r = 0; r < n; ++r) {
    while (r >= bound[g]) ++g;
    part.labels[order[r]] = g;
  }
  part.group_names = std::move(group_names);
  part.anchor_metric = std::move(anchor_name);
  part.cut_fractions = std::move(cut_fractions);
  return part;
}

inline TierPartition MakeTierPartition(const FeaturePanel& panel,
                                       const AnchorMetric& anchor,
                                       std::vector<double> cut_fractions = {0.01, 0.10, 1.00},
                                       std::vector<std::string> group_names = {}) {
  const auto scores = anchor.scores(panel);
  return MakeTierPartition(scores, panel.agent_ids(), std::move(cut_fractions),
                           anchor.name, std::move(group_names));
}

// ---------------------------------------------------------------------------
// Synthetic panels

enum class FeatureLaw { kUniformPm1, kAbsGaussian, kParetoReach };

inline std::string_view ToString(FeatureLaw law) {
  switch (law) {
    case FeatureLaw::kUniformPm1: return "uniform_pm1";
    case FeatureLaw::kAbsGaussian: return "abs_gaussian";
    case FeatureLaw::kParetoReach: return "pareto_reach";
  }
  return "?";
}

inline FeatureLaw ParseFeatureLaw(std::string_view s) {
  if (s == "uniform_pm1") return FeatureLaw::kUniformPm1;
  if (s == "abs_gaussian") return FeatureLaw::kAbsGaussian;
  if (s == "pareto_reach") return FeatureLaw::kParetoReach;
  Fail(ErrorKind::kUsage, "unknown feature law '" + std::string(s) + "'");
}

struct SyntheticPanelSpec {
  std::size_t n_agents = 1000;
  std::size_t n_steps = 1;
  std::size_t n_dims = 3;
  FeatureLaw feature_law = FeatureLaw::kAbsGaussian;
  double pareto_alpha = 1.5;
  // pareto_reach only: Gaussian-copula correlation between reach and the
  // engagement dims. Engagement marginals stay half-normal.
  double reach_engagement_correlation = 0.0;
  std::uint64_t seed = 0;

  void Validate() const {
    Require(n_agents > 0 && n_steps > 0 && n_dims > 0,
            "synthetic: N, T, D must be positive");
    if (feature_law == FeatureLaw::kParetoReach) {
      Require(pareto_alpha > 1.0, "synthetic: pareto_alpha must exceed 1");
      Require(reach_engagement_correlation >= 0.0 &&
                  reach_engagement_correlation < 1.0,
              "synthetic: correlation must lie in [0, 1)");
    }
  }
};

namespace detail {

// Uniform on [0, 1) from the top 53 bits.
inline double UnitUniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double StdNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace detail

// Raw per-step draws; uniform_pm1 values stay in [-1, 1).
inline std::vector<FeatureMatrix> GenerateSyntheticRaw(
    const SyntheticPanelSpec& spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FeatureMatrix> steps(spec.n_steps,
                                   FeatureMatrix(spec.n_agents, spec.n_dims));
  const double rho = spec.reach_engagement_correlation;
  const double rest = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    double reach = 0.0;
    double reach_score = 0.0;  // standard-normal score of the reach quantile
    if (spec.feature_law == FeatureLaw::kParetoReach) {
      const double p = detail::UnitUniform(rng);
      reach = std::log1p(std::pow(1.0 - p, -1.0 / spec.pareto_alpha));
      const double pc = std::clamp(p, 1e-300, 1.0 - 1e-16);
      reach_score = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * pc);
    }
    for (std::size_t t = 0; t < spec.n_steps; ++t) {
      for (std::size_t d = 0; d < spec.n_dims; ++d) {
        double v = 0.0;
        switch (spec.feature_law) {
          case FeatureLaw::kUniformPm1:
            v = 2.0 * detail::UnitUniform(rng) - 1.0;
            break;
          case FeatureLaw::kAbsGaussian:
            v = std::abs(normal(rng));
            break;
          case FeatureLaw::kParetoReach:
            if (d == 0) {
              v = reach;
            } else if (rho == 0.0) {
              v = std::abs(normal(rng));
            } else {
              // Half-normal quantile of Phi(w): sqrt(2) * erf_inv(Phi(w)).
              const double w = rho * reach_score + rest * normal(rng);
              const double u = std::min(detail::StdNormalCdf(w), 1.0 - 1e-16);
              v = std::sqrt(2.0) * boost::math::erf_inv(u);
            }
            break;
        }
        steps[t](i, d) = v;
      }
    }
  }
  return steps;
}

inline FeaturePanel GenerateSynthetic(const SyntheticPanelSpec& spec) {
  const auto raw = GenerateSyntheticRaw(spec);
  std::vector<double> values(spec.n_agents * spec.n_steps * spec.n_dims);
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    for (std::size_t t = 0; t < spec.n_steps; ++t) {
      for (std::size_t d = 0; d < spec.n_dims; ++d) {
        double v = raw[t](i, d);
        if (spec.feature_law == FeatureLaw::kUniformPm1) v = 0.5 * (v + 1.0);
        values[(i * spec.n_steps + t) * spec.n_dims + d] = v;
      }
    }
  }
  return FeaturePanel(spec.n_agents, spec.n_steps, spec.n_dims,
                      std::move(values), SequentialAgentIds(spec.n_agents));
}

}  // namespace asattr
