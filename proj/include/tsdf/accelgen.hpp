// Copyright 2026 The tsdf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tsdf/error.hpp"
#include "tsdf/platform.hpp"

// Design-space exploration over an analytical accelerator model and the
// run-time governor that moves between the resulting design points.

namespace tsdf::accel {

struct Knob {
  std::string name;
  std::vector<double> values;  // ascending, > 0
};

// latency(stage) = c0 + c1 / v(knob) + pair_c / (v(knob) * v(pair_knob))
//                + workload * (slope0 + slope1 / v(knob))
struct LatencyTerm {
  std::string knob;
  double c0 = 0.0;
  double c1 = 0.0;
  double slope0 = 0.0;
  double slope1 = 0.0;
  std::string pair_knob;  // empty: no pairwise term
  double pair_c = 0.0;
};

// power(stage) = p0 + p1 * v(knob)
struct PowerTerm {
  std::string knob;
  double p0 = 0.0;
  double p1 = 0.0;
};

struct Stage {
  std::string name;
  LatencyTerm latency;
  PowerTerm power;
};

// Indices into each knob's value list, in knob order.
using Config = std::vector<int>;

struct KnobSpace {
  std::vector<Knob> knobs;
  std::vector<Stage> stages;
  double static_mw = 0.0;

  int knob_index(const std::string& name) const {
    for (std::size_t i = 0; i < knobs.size(); ++i) {
      if (knobs[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  std::uint64_t size() const {
    std::uint64_t n = 1;
    for (const auto& k : knobs) {
      n *= k.values.size();
      if (n > (std::uint64_t{1} << 62)) break;
    }
    return n;
  }

  std::string config_id(const Config& c) const {
    std::ostringstream os;
    for (std::size_t i = 0; i < knobs.size(); ++i) {
      os << (i ? "," : "") << knobs[i].name << '=' << knobs[i].values[c[i]];
    }
    return os.str();
  }
};

// Load-time check of the structure pruning relies on: declared knobs,
// non-negative coefficients, strictly ascending positive values. Together
// these make latency non-increasing and power non-decreasing in every knob.
inline void check_knob_space(const KnobSpace& s) {
  if (s.knobs.empty()) throw Error(ErrorKind::InvalidModel, "knob space declares no knobs");
  for (const auto& k : s.knobs) {
    if (k.values.empty()) throw Error(ErrorKind::InvalidModel, "knob '" + k.name + "' has no values");
    for (std::size_t i = 0; i < k.values.size(); ++i) {
      if (!(k.values[i] > 0.0)) throw Error(ErrorKind::InvalidModel, "knob '" + k.name + "' values must be > 0");
      if (i && !(k.values[i] > k.values[i - 1])) {
        throw Error(ErrorKind::InvalidModel, "knob '" + k.name + "' values must be strictly ascending");
      }
    }
  }
  if (s.static_mw < 0) throw Error(ErrorKind::InvalidModel, "static_mw must be >= 0");
  for (const auto& st : s.stages) {
    const auto& l = st.latency;
    const auto& p = st.power;
    if (s.knob_index(l.knob) < 0 || s.knob_index(p.knob) < 0 ||
        (!l.pair_knob.empty() && s.knob_index(l.pair_knob) < 0)) {
      throw Error(ErrorKind::InvalidModel, "stage '" + st.name + "' references an undeclared knob");
    }
    for (double c : {l.c0, l.c1, l.slope0, l.slope1, l.pair_c, p.p0, p.p1}) {
      if (c < 0) throw Error(ErrorKind::InvalidModel, "stage '" + st.name + "' has a negative coefficient");
    }
  }
}

struct Evaluation {
  double base_ms = 0.0;
  double slope_ms = 0.0;
  double power_mw = 0.0;

  double latency_at(double workload) const { return base_ms + slope_ms * workload; }
};

inline Evaluation evaluate(const KnobSpace& s, const Config& c) {
  Evaluation ev;
  ev.power_mw = s.static_mw;
  for (const auto& st : s.stages) {
    const auto& l = st.latency;
    const double v = s.knobs[s.knob_index(l.knob)].values[c[s.knob_index(l.knob)]];
    double base = l.c0 + l.c1 / v;
    if (!l.pair_knob.empty()) {
      const int j = s.knob_index(l.pair_knob);
      base += l.pair_c / (v * s.knobs[j].values[c[j]]);
    }
    ev.base_ms += base;
    ev.slope_ms += l.slope0 + l.slope1 / v;
    const int pk = s.knob_index(st.power.knob);
    ev.power_mw += st.power.p0 + st.power.p1 * s.knobs[pk].values[c[pk]];
  }
  return ev;
}

struct FrontierPoint {
  Config config;
  double latency_ms = 0.0;  // at the workload the frontier was built for
  double power_mw = 0.0;
  LatencyModel model;       // latency as a function of workload

  friend bool operator==(const FrontierPoint& a, const FrontierPoint& b) {
    return a.config == b.config && a.latency_ms == b.latency_ms && a.power_mw == b.power_mw;
  }
};

struct ParetoFrontier {
  std::vector<FrontierPoint> points;  // ascending latency, strictly descending power
  double deadline_ms = 0.0;
  double workload_max = 0.0;
  std::uint64_t visited = 0;  // configurations evaluated to build it
};

inline constexpr std::uint64_t kExhaustiveConfigLimit = 1'000'000;

namespace detail {

inline FrontierPoint make_point(const KnobSpace& s, const Config& c, double workload_max) {
  const Evaluation ev = evaluate(s, c);
  FrontierPoint p;
  p.config = c;
  p.latency_ms = ev.latency_at(workload_max);
  p.power_mw = ev.power_mw;
  p.model = {ev.base_ms, ev.slope_ms, workload_max, std::nullopt};
  return p;
}

// Keeps the points not dominated by any other; of two points equal in both
// dimensions the lexicographically smaller config survives.
inline std::vector<FrontierPoint> non_dominated(std::vector<FrontierPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
    if (a.power_mw != b.power_mw) return a.power_mw < b.power_mw;
    return a.config < b.config;
  });
  std::vector<FrontierPoint> out;
  double best_power = std::numeric_limits<double>::infinity();
  for (auto& p : pts) {
    if (p.power_mw < best_power) {
      best_power = p.power_mw;
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline bool next_config(const KnobSpace& s, Config& c) {
  for (std::size_t i = c.size(); i-- > 0;) {
    if (++c[i] < static_cast<int>(s.knobs[i].values.size())) return true;
    c[i] = 0;
  }
  return false;
}

}  // namespace detail

inline ParetoFrontier enumerate_pareto(const KnobSpace& space, double deadline_ms, double workload_max) {
  check_knob_space(space);
  if (space.size() > kExhaustiveConfigLimit) {
    throw Error(ErrorKind::SearchSpaceTooLarge, "OverflowGuard: " + std::to_string(space.size()) +
                                                    " configurations exceed the exhaustive limit");
  }
  ParetoFrontier f;
  f.deadline_ms = deadline_ms;
  f.workload_max = workload_max;
  std::vector<FrontierPoint> feasible;
  Config c(space.knobs.size(), 0);
  do {
    ++f.visited;
    auto p = detail::make_point(space, c, workload_max);
    if (p.latency_ms <= deadline_ms) feasible.push_back(std::move(p));
  } while (detail::next_config(space, c));
  f.points = detail::non_dominated(std::move(feasible));
  if (f.points.empty()) throw Error(ErrorKind::EmptyFrontier, "EmptyFrontier: no configuration meets the deadline");
  return f;
}

namespace detail {

// Non-dominated archive used during branch and bound.
class Archive {
 public:
  // Some archived point is <= (latency, power) in both and strictly better
  // in at least one.
  bool dominates(double latency, double power) const {
    for (const auto& q : pts_) {
      if (q.latency_ms <= latency && q.power_mw <= power && (q.latency_ms < latency || q.power_mw < power)) {
        return true;
      }
    }
    return false;
  }

  void insert(FrontierPoint p) {
    for (auto& q : pts_) {
      if (q.latency_ms == p.latency_ms && q.power_mw == p.power_mw) {
        if (p.config < q.config) q = std::move(p);
        return;
      }
    }
    if (dominates(p.latency_ms, p.power_mw)) return;
    std::erase_if(pts_, [&](const FrontierPoint& q) {
      return p.latency_ms <= q.latency_ms && p.power_mw <= q.power_mw;
    });
    pts_.push_back(std::move(p));
  }

  std::vector<FrontierPoint> take() { return std::move(pts_); }

 private:
  std::vector<FrontierPoint> pts_;
};

}  // namespace detail

// Branch and bound over knobs in declaration order. With the knobs fixed so
// far, setting every free knob to its largest value gives the subtree's
// minimum latency and to its smallest value its minimum power; a subtree is
// cut when the minimum latency misses the deadline or an archived point
// dominates the (minimum latency, minimum power) corner.
inline ParetoFrontier pruned_pareto(const KnobSpace& space, double deadline_ms, double workload_max) {
  check_knob_space(space);
  ParetoFrontier f;
  f.deadline_ms = deadline_ms;
  f.workload_max = workload_max;
  const std::size_t n = space.knobs.size();
  detail::Archive archive;
  Config fast(n);
  Config cheap(n);

  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == n) {
      ++f.visited;
      auto p = detail::make_point(space, fast, workload_max);
      if (p.latency_ms <= deadline_ms) archive.insert(std::move(p));
      return;
    }
    const int count = static_cast<int>(space.knobs[depth].values.size());
    for (int v = count - 1; v >= 0; --v) {
      fast[depth] = v;
      cheap[depth] = v;
      for (std::size_t j = depth + 1; j < n; ++j) {
        fast[j] = static_cast<int>(space.knobs[j].values.size()) - 1;
        cheap[j] = 0;
      }
      const double min_latency = evaluate(space, fast).latency_at(workload_max);
      if (min_latency > deadline_ms) break;  // smaller values are slower still
      const double min_power = evaluate(space, cheap).power_mw;
      if (archive.dominates(min_latency, min_power)) continue;
      self(self, depth + 1);
    }
  };
  recurse(recurse, 0);

  f.points = detail::non_dominated(archive.take());
  if (f.points.empty()) throw Error(ErrorKind::EmptyFrontier, "EmptyFrontier: no configuration meets the deadline");
  return f;
}

// Each frontier point becomes a (node, ACCEL, config id) performance entry.
inline PerfSpec frontier_to_perf(const ParetoFrontier& f, const KnobSpace& space, const std::string& node) {
  PerfSpec spec;
  for (const auto& p : f.points) {
    spec.add(node, PeClass::ACCEL, space.config_id(p.config), {p.model, p.power_mw, space.static_mw});
  }
  return spec;
}

inline std::string frontier_csv(const ParetoFrontier& f, const KnobSpace& space) {
  std::ostringstream os;
  os.precision(10);
  os << "latency_ms,power_mw";
  for (const auto& k : space.knobs) os << ',' << k.name;
  os << '\n';
  for (const auto& p : f.points) {
    os << p.latency_ms << ',' << p.power_mw;
    for (std::size_t i = 0; i < space.knobs.size(); ++i) os << ',' << space.knobs[i].values[p.config[i]];
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Governor

struct GovernorParams {
  double deadline_ms = 0.0;
  double hysteresis = 0.1;  // workload inflation used when choosing a cheaper point
  int confirm = 3;          // consecutive observations before a non-urgent switch
};

struct GovernorState {
  std::size_t current = 0;  // index into the frontier
  std::optional<std::size_t> pending;
  int pending_count = 0;

  friend bool operator==(const GovernorState&, const GovernorState&) = default;
};

struct GovernorStep {
  GovernorState state;
  bool switched = false;
  bool urgent = false;          // current point was predicted to miss
  bool no_safe_config = false;  // even the fastest point misses
};

inline bool predicted_safe(const FrontierPoint& p, double workload, double deadline_ms) {
  return p.model.at(workload) <= deadline_ms;
}

// The point the governor aims for at this workload: cheapest point safe
// under the inflated workload, else cheapest safe at the observed workload,
// else the fastest point.
inline std::size_t governor_target(const ParetoFrontier& f, double workload, const GovernorParams& gp,
                                   bool* no_safe = nullptr) {
  auto cheapest = [&](double w) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      if (!predicted_safe(f.points[i], w, gp.deadline_ms)) continue;
      if (!best || f.points[i].power_mw < f.points[*best].power_mw) best = i;
    }
    return best;
  };
  if (no_safe) *no_safe = false;
  if (auto i = cheapest(workload * (1.0 + gp.hysteresis))) return *i;
  if (auto i = cheapest(workload)) return *i;
  if (no_safe) *no_safe = true;
  std::size_t fastest = 0;
  for (std::size_t i = 1; i < f.points.size(); ++i) {
    if (f.points[i].model.at(workload) < f.points[fastest].model.at(workload)) fastest = i;
  }
  return fastest;
}

// Moves to a faster point only when the current one is predicted to miss
// at the observed workload (immediately), and to a cheaper point only after
// it has been the target for `confirm` consecutive observations. Between
// the two thresholds the current point is held, so each crossing of the
// widened band causes at most one switch.
inline GovernorStep governor_step(const ParetoFrontier& f, GovernorState state, double observed_workload,
                                  const GovernorParams& gp) {
  if (f.points.empty()) throw Error(ErrorKind::EmptyFrontier, "governor needs a non-empty frontier");
  if (state.current >= f.points.size()) throw Error(ErrorKind::InvalidModel, "current point is not on the frontier");
  GovernorStep out;
  const std::size_t target = governor_target(f, observed_workload, gp, &out.no_safe_config);
  const bool current_safe = predicted_safe(f.points[state.current], observed_workload, gp.deadline_ms);

  auto move_to = [&](std::size_t i, bool urgent) {
    state.current = i;
    state.pending.reset();
    state.pending_count = 0;
    out.switched = true;
    out.urgent = urgent;
  };

  if (!current_safe) {
    if (target != state.current) {
      move_to(target, true);
    } else {
      state.pending.reset();
      state.pending_count = 0;
    }
  } else if (f.points[target].power_mw < f.points[state.current].power_mw) {
    if (state.pending == target) {
      ++state.pending_count;
    } else {
      state.pending = target;
      state.pending_count = 1;
    }
    if (state.pending_count >= gp.confirm) move_to(target, false);
  } else {
    state.pending.reset();
    state.pending_count = 0;
  }
  out.state = state;
  return out;
}

}  // namespace tsdf::accel
