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
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsdf/dsl.hpp"
#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"
#include "tsdf/platform.hpp"

namespace tsdf {

namespace detail {

inline std::string fmt_ms(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

// Nodes the graph designates as sinks; falls back to nodes without
// consumers when no outputs are declared.
inline std::vector<std::string> sink_nodes(const Mdfg& g) {
  if (!g.outputs.empty()) return g.outputs;
  std::vector<std::string> out;
  for (const auto& [name, _] : g.nodes) {
    if (g.out_edges(name).empty()) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Utilization and response bounds

// utilization(pe) = sum of wcet_ms * rate_hz / 1000 over the compute nodes
// placed on pe. The IO pseudo-PE always reports 0.
inline std::map<std::string, double> check_utilization(const Mdfg& g, const Platform& platform,
                                                       const Mapping& mapping, const PerfSpec& perf) {
  std::map<std::string, double> util;
  util[kIoPe] = 0.0;
  for (const auto& pe : platform.pes) util[pe.id] = 0.0;
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) continue;
    const PerfEntry& e = placed_entry(platform, perf, mapping, name);
    util[mapping.assignment.at(name).pe] += e.latency.wcet_ms() * n.rate_hz / 1000.0;
  }
  return util;
}

// Worst-case release-to-completion time of each node. Under non-preemptive
// FIFO service with utilization <= 1, a job waits at most for one job of
// every other node on its PE, so the bound is the sum of their wcets.
inline std::map<std::string, double> response_bounds(const Mdfg& g, const Platform& platform,
                                                     const Mapping& mapping, const PerfSpec& perf) {
  std::map<std::string, double> pe_sum;
  std::map<std::string, double> out;
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) continue;
    pe_sum[mapping.assignment.at(name).pe] += placed_entry(platform, perf, mapping, name).latency.wcet_ms();
  }
  for (const auto& [name, n] : g.nodes) {
    out[name] = runs_on_io(n) ? 0.0 : pe_sum.at(mapping.assignment.at(name).pe);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Buffer sizing

struct BufferAlloc {
  std::int64_t slots = 0;
  std::int64_t bytes = 0;

  friend bool operator==(const BufferAlloc&, const BufferAlloc&) = default;
};

struct BufferPlan {
  std::map<EdgeId, BufferAlloc> allocations;
  std::vector<EdgeId> unbounded;  // Fifo edges whose producer outpaces the consumer
};

// Latest: one stable slot being read plus one being written. Window(k): k
// read plus one written. Fifo: enough for the producer to run ahead of a
// faster consumer by one period.
inline std::int64_t policy_slots(const Policy& policy, double producer_hz, double consumer_hz) {
  switch (policy.kind()) {
    case Policy::Kind::Latest: return 2;
    case Policy::Kind::Window: return policy.window_size() + 1;
    case Policy::Kind::Fifo:
      return static_cast<std::int64_t>(std::ceil(producer_hz / consumer_hz)) + 1;
  }
  return 0;
}

// Sustained firing rate: a node pops one token from every Fifo input per
// firing, so it cannot outrun the slowest of those producers.
inline std::map<std::string, double> effective_rates(const Mdfg& g) {
  std::map<std::string, double> rate;
  for (const auto& name : topo_order(g)) rate[name] = g.node(name).rate_hz;
  for (const auto& name : topo_order(g)) {
    for (const auto& e : g.edges) {
      if (e.consumer == name && e.policy.is_fifo()) rate[name] = std::min(rate[name], rate.at(e.producer));
    }
  }
  return rate;
}

inline BufferPlan size_buffers(const Mdfg& g) {
  BufferPlan plan;
  const auto rate = effective_rates(g);
  for (const auto& e : g.edges) {
    const NodeSpec& p = g.node(e.producer);
    const NodeSpec& c = g.node(e.consumer);
    if (e.policy.is_fifo() && rate.at(e.producer) > rate.at(e.consumer)) {
      plan.unbounded.push_back(e.id());
      continue;
    }
    const auto slots = policy_slots(e.policy, p.rate_hz, c.rate_hz);
    plan.allocations[e.id()] = {slots, slots * p.token_bytes};
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Reaction latency

// Sampling-chain bound per sink: every node on a path adds its period plus
// its response bound (sensors add their period, actuators nothing), which
// covers Latest sampling from producers that fire at every release.
//
// The remaining terms follow from each producer publishing its i-th token
// within [b + i P, b + i P + W], P being its sustained period and W its
// jitter: W = R - wcet for a node that fires at every release and
// W_in + T + R - wcet for one paced by Fifo inputs (W_in the largest jitter
// among them). A Window(k) edge adds k-1 steps between retained tokens; a
// step is P_p, or P_p + wcet_c + W_p when the producer can publish twice
// while the consumer holds its window and the second publication evicts the
// first. A Fifo edge adds W_in + T_c + R_c - wcet_c of queueing behind the
// other Fifo inputs and the release grid. A Fifo-paced node that feeds
// others adds P + W_in so its consumers' own terms stay valid.
inline std::map<std::string, double> path_reaction_latency(const Mdfg& g, const Platform& platform,
                                                           const PerfSpec& perf, const Mapping& mapping) {
  const auto response = response_bounds(g, platform, mapping, perf);
  const auto rate = effective_rates(g);
  auto wcet = [&](const std::string& name) {
    return runs_on_io(g.node(name)) ? 0.0 : placed_entry(platform, perf, mapping, name).latency.wcet_ms();
  };
  std::map<std::string, double> jitter;
  std::map<std::string, double> acc;
  for (const auto& name : topo_order(g)) {
    const NodeSpec& n = g.node(name);
    const double t = n.period_ms();
    const double slack = response.at(name) - wcet(name);
    double w_in = 0.0;
    bool paced = false;
    for (const auto* e : g.in_edges(name)) {
      if (!e->policy.is_fifo()) continue;
      paced = true;
      w_in = std::max(w_in, jitter.at(e->producer));
    }
    jitter[name] = n.kind == NodeKind::Sensor ? 0.0 : slack + (paced ? w_in + t : 0.0);

    double own = 0.0;
    if (n.kind == NodeKind::Sensor) own = t;
    if (n.kind == NodeKind::Compute) own = t + response.at(name);
    if (paced && !g.out_edges(name).empty()) own += 1000.0 / rate.at(name) + w_in;
    double upstream = 0.0;
    for (const auto* e : g.in_edges(name)) {
      const double p_period = 1000.0 / rate.at(e->producer);
      const double p_jitter = jitter.at(e->producer);
      double age = 0.0;
      if (e->policy.is_window()) {
        double step = p_period;
        if (p_period < wcet(name) + p_jitter) step += wcet(name) + p_jitter;
        age = (e->policy.window_size() - 1) * step;
      }
      if (e->policy.is_fifo()) age = w_in + t + slack;
      upstream = std::max(upstream, acc.at(e->producer) + age);
    }
    acc[name] = own + upstream;
  }
  std::map<std::string, double> out;
  for (const auto& s : sink_nodes(g)) out[s] = acc.at(s);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

struct Verdict {
  enum class Kind { Pass, Warn, Fail };
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  Kind kind() const {
    if (!failures.empty()) return Kind::Fail;
    return warnings.empty() ? Kind::Pass : Kind::Warn;
  }
  void warn(std::string r) { warnings.push_back(std::move(r)); }
  void fail(std::string r) { failures.push_back(std::move(r)); }
};

inline const char* to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Pass: return "Pass";
    case Verdict::Kind::Warn: return "Warn";
    case Verdict::Kind::Fail: return "Fail";
  }
  return "?";
}

struct NodeTiming {
  std::string pe;
  double rate_hz = 0.0;
  double period_ms = 0.0;
  double wcet_ms = 0.0;
  double acet_ms = 0.0;
  double response_ms = 0.0;
};

struct FrequencyCheck {
  std::string node;
  dsl::FrequencyConstraint required;
  double declared_hz = 0.0;
  bool satisfied = false;
};

struct TimingReport {
  std::vector<FrequencyCheck> frequency_checks;
  std::map<std::string, Verdict> node_verdicts;
  std::map<std::string, NodeTiming> node_timing;
  std::map<std::string, double> pe_utilization;
  std::map<EdgeId, BufferAlloc> edge_buffers;
  std::map<std::string, double> path_latencies;
  std::vector<std::string> warnings;
  std::vector<std::string> reject_reasons;

  bool accepted() const { return reject_reasons.empty(); }
};

struct VerifyOptions {
  // Fraction of each PE held back: the test becomes u <= 1 - margin and
  // response <= period * (1 - margin).
  double margin = 0.0;
};

namespace detail {

inline bool satisfies(double rate, const dsl::FrequencyConstraint& c) {
  switch (c.relation) {
    case dsl::Relation::AtLeast: return rate >= c.hz;
    case dsl::Relation::AtMost: return rate <= c.hz;
    case dsl::Relation::Equal: return rate == c.hz;
  }
  return false;
}

}  // namespace detail

inline TimingReport verify(const Mdfg& g, const dsl::ConstraintSet& constraints, const Platform& platform,
                           const PerfSpec& perf, const Mapping& mapping, VerifyOptions opts = {}) {
  TimingReport r;
  for (const auto& [name, _] : g.nodes) r.node_verdicts[name];

  const auto validation = validate_graph(g);
  for (const auto& v : validation.violations) {
    r.reject_reasons.push_back(std::string(to_string(v.category)) + "(" + v.subject + "): " + v.message);
  }
  if (!validation.empty()) return r;

  if (constraints.empty()) r.warnings.push_back("NoTimingConstraints: program declares no timing constraints");

  const double cap = 1.0 - opts.margin;
  bool specs_complete = true;

  for (const auto& [name, n] : g.nodes) {
    Verdict& v = r.node_verdicts[name];
    const auto f = constraints.frequency(name);
    if (f) r.frequency_checks.push_back({name, *f, n.rate_hz, detail::satisfies(n.rate_hz, *f)});
    if (f && !r.frequency_checks.back().satisfied) {
      v.fail(name + ": rate " + detail::fmt_ms(n.rate_hz) + " Hz violates frequency " +
             dsl::to_string(f->relation) + " " + detail::fmt_ms(f->hz) + " Hz");
    }
    NodeTiming& t = r.node_timing[name];
    t.rate_hz = n.rate_hz;
    t.period_ms = n.period_ms();
    t.pe = kIoPe;
    if (runs_on_io(n)) continue;
    try {
      const PerfEntry& e = placed_entry(platform, perf, mapping, name);
      t.pe = mapping.assignment.at(name).pe;
      t.wcet_ms = e.latency.wcet_ms();
      t.acet_ms = e.latency.acet_ms();
    } catch (const Error& err) {
      v.fail(err.what());
      specs_complete = false;
    }
  }

  if (specs_complete) {
    r.pe_utilization = check_utilization(g, platform, mapping, perf);
    const auto response = response_bounds(g, platform, mapping, perf);
    for (const auto& [name, n] : g.nodes) {
      if (runs_on_io(n)) continue;
      Verdict& v = r.node_verdicts[name];
      NodeTiming& t = r.node_timing[name];
      t.response_ms = response.at(name);
      const double budget = t.period_ms * cap;
      const double u = r.pe_utilization.at(t.pe);
      if (t.wcet_ms > budget) {
        v.fail(name + ": wcet " + detail::fmt_ms(t.wcet_ms) + " ms > period " + detail::fmt_ms(t.period_ms) + " ms");
      } else if (t.response_ms > budget) {
        v.fail(name + ": response bound " + detail::fmt_ms(t.response_ms) + " ms on " + t.pe + " > period " +
               detail::fmt_ms(t.period_ms) + " ms");
      }
      if (u > cap) {
        v.fail(name + ": " + t.pe + " utilization " + detail::fmt_ms(u) + " > " + detail::fmt_ms(cap));
      }
    }
  }

  for (const auto& e : g.edges) {
    const NodeSpec& p = g.node(e.producer);
    const NodeSpec& c = g.node(e.consumer);
    if (!e.policy.is_fifo() && c.rate_hz > p.rate_hz) {
      r.node_verdicts[c.name].warn(c.name + ": fires at " + detail::fmt_ms(c.rate_hz) + " Hz, faster than producer " +
                                   p.name + " at " + detail::fmt_ms(p.rate_hz) + " Hz; stale tokens are re-read");
    }
  }

  const auto plan = size_buffers(g);
  r.edge_buffers = plan.allocations;
  for (const auto& id : plan.unbounded) {
    r.reject_reasons.push_back("UnboundedFifo(" + id.to_string() + "): producer outpaces consumer");
  }

  if (specs_complete) r.path_latencies = path_reaction_latency(g, platform, perf, mapping);

  for (const auto& [name, v] : r.node_verdicts) {
    for (const auto& reason : v.failures) r.reject_reasons.push_back("Fail(" + reason + ")");
  }
  return r;
}

inline TimingReport verify(const dsl::Lowered& program, const Platform& platform, const PerfSpec& perf,
                           const Mapping& mapping, VerifyOptions opts = {}) {
  return verify(program.graph, program.constraints, platform, perf, mapping, opts);
}

}  // namespace tsdf
