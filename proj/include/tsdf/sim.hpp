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
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "tsdf/accelgen.hpp"
#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"
#include "tsdf/platform.hpp"
#include "tsdf/verifier.hpp"

// Deterministic discrete-event execution of a macro-dataflow graph.
//
// Every node is released by its own timer at phase + round(k * 1e9 / rate)
// ns. A release whose inputs are not all warm is skipped; otherwise a job
// is queued on the node's PE. PEs serve jobs non-preemptively in FIFO
// order. Inputs are snapshotted when the job starts and the tokens read
// stay pinned in their edge buffers until it completes. Completion
// publishes one token to every out-edge. Latest/Window buffers evict their
// oldest unpinned token when full, so producers never wait; an insertion
// with every slot pinned, or into a full Fifo, is an overflow and the new
// token is discarded. Fifo edges keep only their newest token until the
// consumer first fires.
//
// Same-instant events are ordered completion < dispatch < release, then by
// node (or PE) name.

namespace tsdf::sim {

using Nanos = std::int64_t;

inline Nanos ms_to_ns(double ms) { return static_cast<Nanos>(std::llround(ms * 1e6)); }
inline double ns_to_ms(Nanos ns) { return static_cast<double>(ns) / 1e6; }

// Step-wise workload signal: the value of the last sample at or before t.
struct EnvTrace {
  std::vector<std::pair<double, double>> samples;  // (time_ms, workload)

  void check() const {
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].first > samples[i - 1].first)) {
        throw Error(ErrorKind::InvalidModel, "environment trace times must be strictly increasing (row " +
                                                 std::to_string(i + 1) + ")");
      }
    }
    for (const auto& [t, w] : samples) {
      if (!std::isfinite(t) || !std::isfinite(w) || w < 0) {
        throw Error(ErrorKind::InvalidModel, "environment trace holds a non-finite or negative value");
      }
    }
  }

  bool empty() const { return samples.empty(); }

  double at(double t_ms) const {
    if (samples.empty()) return 0.0;
    auto it = std::upper_bound(samples.begin(), samples.end(), t_ms,
                               [](double t, const auto& s) { return t < s.first; });
    if (it == samples.begin()) return samples.front().second;
    return std::prev(it)->second;
  }
};

enum class LatencyMode { Wcet, Model };

inline const char* to_string(LatencyMode m) { return m == LatencyMode::Wcet ? "wcet" : "model"; }

// Runs the governor for one node: at every release the node's latency
// model becomes that of the frontier point the governor picks.
struct GovernorHook {
  std::string node;
  accel::ParetoFrontier frontier;
  accel::GovernorParams params;
  int switch_cost_firings = 1;
  std::size_t initial_point = 0;
};

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

struct SimOptions {
  double horizon_ms = 1000.0;
  LatencyMode mode = LatencyMode::Wcet;
  std::map<EdgeId, std::int64_t> capacity;  // slots; missing edges use the policy default
  std::map<std::string, double> phase_ms;
  std::vector<GovernorHook> governors;
  bool record_events = true;
};

struct NodeMetrics {
  std::int64_t releases = 0;
  std::int64_t firings = 0;  // jobs created
  std::int64_t completions = 0;
  std::int64_t skipped_cold = 0;
  std::int64_t skipped_starved = 0;
  std::int64_t skipped_overrun = 0;
  std::int64_t skipped_switch = 0;
  std::int64_t deadline_misses = 0;
  double achieved_hz = 0.0;
};

struct EdgeMetrics {
  std::int64_t capacity = 0;  // kUnbounded when unlimited
  std::int64_t tokens_produced = 0;
  std::int64_t tokens_consumed = 0;
  std::int64_t tokens_dropped = 0;
  std::int64_t tokens_resident = 0;
  std::int64_t overflows = 0;
  std::int64_t buffer_high_water = 0;
};

struct SinkMetrics {
  std::vector<double> latencies_ms;

  double max_ms() const {
    return latencies_ms.empty() ? 0.0 : *std::max_element(latencies_ms.begin(), latencies_ms.end());
  }
};

struct SimMetrics {
  double horizon_ms = 0.0;
  std::map<std::string, NodeMetrics> nodes;
  std::map<EdgeId, EdgeMetrics> edges;
  std::map<std::string, SinkMetrics> sinks;
};

struct Event {
  Nanos t_ns;
  std::string kind;
  std::string node;
  std::string detail;
};

struct GovernorSample {
  double t_ms;
  double workload;
  std::size_t point;
  bool switched;
  bool no_safe_config;
};

struct SimResult {
  SimMetrics metrics;
  std::vector<Event> events;
  std::map<std::string, std::vector<Nanos>> firing_times;      // releases that created a job
  std::map<std::string, std::vector<Nanos>> completion_times;  // token publication instants
  std::map<std::string, std::vector<GovernorSample>> governor_trace;
};

inline void write_event_log(std::ostream& os, const std::vector<Event>& events) {
  for (const auto& e : events) {
    os << e.t_ns << ' ' << e.kind << ' ' << e.node;
    if (!e.detail.empty()) os << ' ' << e.detail;
    os << '\n';
  }
}

inline std::int64_t default_capacity(const BufferPlan& plan, const EdgeSpec& e) {
  auto it = plan.allocations.find(e.id());
  return it == plan.allocations.end() ? kUnbounded : it->second.slots;
}

namespace detail {

struct Slot {
  std::uint64_t uid;
  Nanos origin;
  bool read = false;
  bool popped = false;
  int pins = 0;
};

struct EdgeState {
  const EdgeSpec* spec;
  std::deque<Slot> slots;
  std::int64_t capacity;
  std::int64_t produced_ever = 0;
  EdgeMetrics m;

  std::int64_t unpopped() const {
    return std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return !s.popped; });
  }
};

struct Read {
  std::size_t edge;
  std::uint64_t uid;
};

struct Job {
  std::string node;
  std::int64_t k = 0;
  Nanos release = 0;
  Nanos deadline = 0;
  std::vector<Read> reads;
  Nanos origin = 0;
};

struct NodeState {
  const NodeSpec* spec;
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;
  std::string pe;
  const PerfEntry* entry = nullptr;
  int governor = -1;
  accel::GovernorState gov_state;
  int pending_switch_skips = 0;
  Nanos phase = 0;
  bool queued = false;
  bool running = false;
  bool sink = false;
  Job job;  // running job
  std::optional<Job> waiting;
};

struct PeState {
  bool busy = false;
  std::deque<std::string> queue;
};

enum Kind : int { kCompletion = 0, kDispatch = 1, kRelease = 2 };

struct QueuedEvent {
  Nanos t;
  int kind;
  std::string who;
  std::int64_t k;

  bool operator>(const QueuedEvent& o) const {
    return std::tie(t, kind, who, k) > std::tie(o.t, o.kind, o.who, o.k);
  }
};

class Simulator {
 public:
  Simulator(const Mdfg& g, const Platform& platform, const Mapping& mapping, const PerfSpec& perf,
            const EnvTrace& env, const SimOptions& opts)
      : g_(g), env_(env), opts_(opts), horizon_(ms_to_ns(opts.horizon_ms)) {
    env.check();
    if (opts.horizon_ms < 0) throw Error(ErrorKind::Usage, "horizon must be >= 0 ms");
    const BufferPlan plan = size_buffers(g);
    for (const auto& e : g.edges) {
      EdgeState es{};
      es.spec = &e;
      auto cap = opts.capacity.find(e.id());
      es.capacity = cap != opts.capacity.end() ? cap->second : default_capacity(plan, e);
      if (es.capacity < 1) throw Error(ErrorKind::Usage, "edge capacity must be >= 1 slot");
      es.m.capacity = es.capacity;
      edges_.push_back(std::move(es));
    }
    const auto sinks = sink_nodes(g);
    for (const auto& [name, n] : g.nodes) {
      NodeState ns;
      ns.spec = &n;
      auto ph = opts.phase_ms.find(name);
      ns.phase = ph != opts.phase_ms.end() ? ms_to_ns(ph->second) : 0;
      ns.sink = std::find(sinks.begin(), sinks.end(), name) != sinks.end();
      nodes_.emplace(name, std::move(ns));
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      nodes_.at(edges_[i].spec->consumer).in.push_back(i);
      nodes_.at(edges_[i].spec->producer).out.push_back(i);
    }
    for (std::size_t i = 0; i < opts.governors.size(); ++i) {
      const auto& gh = opts.governors[i];
      if (!g.has_node(gh.node) || runs_on_io(g.node(gh.node))) {
        throw Error(ErrorKind::Usage, "governor attached to unknown or non-compute node '" + gh.node + "'");
      }
      if (gh.frontier.points.empty()) throw Error(ErrorKind::EmptyFrontier, "governor frontier is empty");
      NodeState& ns = nodes_.at(gh.node);
      ns.governor = static_cast<int>(i);
      ns.gov_state.current = std::min(gh.initial_point, gh.frontier.points.size() - 1);
    }
    for (auto& [name, ns] : nodes_) {
      if (runs_on_io(*ns.spec)) {
        ns.pe = kIoPe;
        continue;
      }
      auto it = mapping.assignment.find(name);
      if (it == mapping.assignment.end() || platform.find(it->second.pe) == nullptr) {
        throw Error(ErrorKind::MissingSpec, "node '" + name + "' is not mapped to a platform PE");
      }
      ns.pe = it->second.pe;
      if (ns.governor < 0) ns.entry = &placed_entry(platform, perf, mapping, name);
      pes_[ns.pe];
    }
    for (const auto& [name, n] : g.nodes) {
      res_.metrics.nodes[name];
      res_.firing_times[name];
      res_.completion_times[name];
    }
    for (const auto& s : sinks) res_.metrics.sinks[s];
    res_.metrics.horizon_ms = opts.horizon_ms;
  }

  SimResult run() {
    for (const auto& [name, ns] : nodes_) schedule_release(name, 0);
    while (!queue_.empty()) {
      QueuedEvent ev = queue_.top();
      queue_.pop();
      if (ev.t > horizon_) break;
      switch (ev.kind) {
        case kCompletion: complete(ev.who, ev.t); break;
        case kDispatch: dispatch(ev.who, ev.t); break;
        case kRelease: release(ev.who, ev.k, ev.t); break;
      }
    }
    finish();
    return std::move(res_);
  }

 private:
  Nanos release_time(const NodeState& ns, std::int64_t k) const {
    return ns.phase + static_cast<Nanos>(std::llround(static_cast<double>(k) * 1e9 / ns.spec->rate_hz));
  }

  void schedule_release(const std::string& name, std::int64_t k) {
    const Nanos t = release_time(nodes_.at(name), k);
    if (t <= horizon_) queue_.push({t, kRelease, name, k});
  }

  void log(Nanos t, const char* kind, const std::string& node, std::string detail = {}) {
    if (opts_.record_events) res_.events.push_back({t, kind, node, std::move(detail)});
  }

  double latency_ms(NodeState& ns, Nanos start) const {
    const LatencyModel* model = nullptr;
    if (ns.governor >= 0) {
      model = &opts_.governors[ns.governor].frontier.points[ns.gov_state.current].model;
    } else {
      model = &ns.entry->latency;
    }
    if (opts_.mode == LatencyMode::Wcet) return model->wcet_ms();
    if (env_.empty()) return model->acet_ms();
    return model->at(env_.at(ns_to_ms(start)));
  }

  // Cold: some input has not yet held enough tokens. Starved: a Fifo input
  // is warm but currently empty.
  enum class Readiness { Ready, Cold, Starved };

  Readiness readiness(const NodeState& ns) const {
    bool starved = false;
    for (std::size_t i : ns.in) {
      const EdgeState& es = edges_[i];
      const Policy& p = es.spec->policy;
      if (es.produced_ever == 0) return Readiness::Cold;
      if (p.is_window() && static_cast<std::int64_t>(es.slots.size()) < p.window_size()) return Readiness::Cold;
      if (p.is_fifo() && es.unpopped() == 0) starved = true;
    }
    return starved ? Readiness::Starved : Readiness::Ready;
  }

  void release(const std::string& name, std::int64_t k, Nanos t) {
    NodeState& ns = nodes_.at(name);
    NodeMetrics& nm = res_.metrics.nodes.at(name);
    ++nm.releases;
    schedule_release(name, k + 1);
    log(t, "release", name, "k=" + std::to_string(k));

    if (ns.governor >= 0) {
      const auto& gh = opts_.governors[ns.governor];
      const double w = env_.at(ns_to_ms(t));
      const auto step = accel::governor_step(gh.frontier, ns.gov_state, w, gh.params);
      ns.gov_state = step.state;
      res_.governor_trace[name].push_back({ns_to_ms(t), w, step.state.current, step.switched, step.no_safe_config});
      if (step.switched) {
        log(t, "switch", name, "point=" + std::to_string(step.state.current));
        ns.pending_switch_skips = gh.switch_cost_firings;
      }
      if (step.no_safe_config) log(t, "no_safe_config", name);
      if (ns.pending_switch_skips > 0) {
        --ns.pending_switch_skips;
        ++nm.skipped_switch;
        log(t, "skip_switch", name);
        return;
      }
    }

    if (ns.queued) {
      ++nm.skipped_overrun;
      log(t, "skip_overrun", name);
      return;
    }
    switch (readiness(ns)) {
      case Readiness::Cold:
        ++nm.skipped_cold;
        log(t, "skip_cold", name);
        return;
      case Readiness::Starved:
        ++nm.skipped_starved;
        log(t, "skip_starved", name);
        return;
      case Readiness::Ready: break;
    }

    ++nm.firings;
    res_.firing_times.at(name).push_back(t);
    Job job;
    job.node = name;
    job.k = k;
    job.release = t;
    job.deadline = release_time(ns, k + 1);

    if (runs_on_io(*ns.spec)) {
      ns.job = std::move(job);
      start(ns, t);
      finish_job(ns, t);
      return;
    }
    ns.waiting = std::move(job);
    ns.queued = true;
    PeState& pe = pes_.at(ns.pe);
    pe.queue.push_back(name);
    if (!pe.busy) dispatch(ns.pe, t);
  }

  void dispatch(const std::string& pe_id, Nanos t) {
    PeState& pe = pes_.at(pe_id);
    if (pe.busy || pe.queue.empty()) return;
    const std::string name = pe.queue.front();
    pe.queue.pop_front();
    NodeState& ns = nodes_.at(name);
    ns.job = std::move(*ns.waiting);
    ns.waiting.reset();
    ns.queued = false;
    ns.running = true;
    pe.busy = true;
    start(ns, t);
    const double lat = latency_ms(ns, t);
    const Nanos end = t + ms_to_ns(lat);
    log(t, "start", name, "pe=" + pe_id + " latency_ns=" + std::to_string(end - t));
    queue_.push({end, kCompletion, name, ns.job.k});
  }

  // Snapshot inputs: pin what is read, pop Fifo heads.
  void start(NodeState& ns, Nanos t) {
    Job& job = ns.job;
    job.reads.clear();
    Nanos origin = ns.spec->kind == NodeKind::Sensor ? t : std::numeric_limits<Nanos>::max();
    for (std::size_t i : ns.in) {
      EdgeState& es = edges_[i];
      const Policy& p = es.spec->policy;
      auto take = [&](Slot& s) {
        if (!s.read) {
          s.read = true;
          ++es.m.tokens_consumed;
        }
        ++s.pins;
        job.reads.push_back({i, s.uid});
        origin = std::min(origin, s.origin);
      };
      if (p.is_fifo()) {
        auto it = std::find_if(es.slots.begin(), es.slots.end(), [](const Slot& s) { return !s.popped; });
        it->popped = true;
        take(*it);
      } else {
        const std::size_t n = p.is_window() ? static_cast<std::size_t>(p.window_size()) : 1;
        for (std::size_t j = 0; j < n; ++j) take(es.slots[es.slots.size() - 1 - j]);
      }
    }
    job.origin = origin;
  }

  void complete(const std::string& name, Nanos t) {
    NodeState& ns = nodes_.at(name);
    ns.running = false;
    PeState& pe = pes_.at(ns.pe);
    pe.busy = false;
    finish_job(ns, t);
    if (!pe.queue.empty()) queue_.push({t, kDispatch, ns.pe, 0});
  }

  void finish_job(NodeState& ns, Nanos t) {
    Job& job = ns.job;
    const std::string& name = ns.spec->name;
    NodeMetrics& nm = res_.metrics.nodes.at(name);
    for (const auto& r : job.reads) {
      EdgeState& es = edges_[r.edge];
      auto it = std::find_if(es.slots.begin(), es.slots.end(), [&](const Slot& s) { return s.uid == r.uid; });
      if (it == es.slots.end()) continue;
      if (--it->pins == 0 && it->popped) es.slots.erase(it);
    }
    ++nm.completions;
    res_.completion_times.at(name).push_back(t);
    if (!runs_on_io(*ns.spec)) log(t, "complete", name, "k=" + std::to_string(job.k));
    if (!runs_on_io(*ns.spec) && t > job.deadline) {
      ++nm.deadline_misses;
      log(t, "miss", name, "late_ns=" + std::to_string(t - job.deadline));
    }
    if (ns.sink && job.origin != std::numeric_limits<Nanos>::max()) {
      res_.metrics.sinks.at(name).latencies_ms.push_back(ns_to_ms(t - job.origin));
    }
    for (std::size_t i : ns.out) publish(edges_[i], t, job.origin);
  }

  void publish(EdgeState& es, Nanos t, Nanos origin) {
    ++es.m.tokens_produced;
    ++es.produced_ever;
    const std::string who = es.spec->id().to_string();
    // A Fifo consumer joins the stream at its first firing; until then only
    // the newest token is kept.
    if (es.spec->policy.is_fifo() && res_.metrics.nodes.at(es.spec->consumer).firings == 0) {
      for (const auto& s : es.slots) {
        if (!s.read) ++es.m.tokens_dropped;
        log(t, "drop", es.spec->producer, "edge=" + who);
      }
      es.slots.clear();
    }
    if (static_cast<std::int64_t>(es.slots.size()) >= es.capacity) {
      bool evicted = false;
      if (!es.spec->policy.is_fifo()) {
        auto it = std::find_if(es.slots.begin(), es.slots.end(), [](const Slot& s) { return s.pins == 0; });
        if (it != es.slots.end()) {
          if (!it->read) {
            ++es.m.tokens_dropped;
            log(t, "drop", es.spec->producer, "edge=" + who);
          }
          es.slots.erase(it);
          evicted = true;
        }
      }
      if (!evicted) {
        ++es.m.overflows;
        ++es.m.tokens_dropped;
        log(t, "overflow", es.spec->producer, "edge=" + who);
        return;
      }
    }
    es.slots.push_back({next_uid_++, origin});
    es.m.buffer_high_water = std::max<std::int64_t>(es.m.buffer_high_water, es.slots.size());
  }

  void finish() {
    const double secs = opts_.horizon_ms / 1000.0;
    for (auto& [name, nm] : res_.metrics.nodes) {
      nm.achieved_hz = secs > 0 ? static_cast<double>(nm.completions) / secs : 0.0;
    }
    for (auto& es : edges_) {
      es.m.tokens_resident =
          std::count_if(es.slots.begin(), es.slots.end(), [](const Slot& s) { return !s.read && !s.popped; });
      res_.metrics.edges[es.spec->id()] = es.m;
    }
  }

  const Mdfg& g_;
  const EnvTrace& env_;
  const SimOptions& opts_;
  Nanos horizon_;
  std::vector<EdgeState> edges_;
  std::map<std::string, NodeState> nodes_;
  std::map<std::string, PeState> pes_;
  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
  std::uint64_t next_uid_ = 0;
  SimResult res_;
};

}  // namespace detail

inline SimResult simulate(const Mdfg& g, const Platform& platform, const Mapping& mapping, const PerfSpec& perf,
                          const EnvTrace& env, const SimOptions& opts) {
  return detail::Simulator(g, platform, mapping, perf, env, opts).run();
}

// 1000 / gap for every pair of consecutive instants, in Hz.
inline std::vector<double> instantaneous_rates(const std::vector<Nanos>& times) {
  std::vector<double> out;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const Nanos gap = times[i] - times[i - 1];
    if (gap > 0) out.push_back(1e9 / static_cast<double>(gap));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Static vs dynamic comparison

struct NodeDeviation {
  double declared_hz = 0.0;
  double achieved_hz = 0.0;
  double abs_diff_hz = 0.0;
};

struct EdgeDeviation {
  std::int64_t allocated_slots = 0;
  std::int64_t high_water = 0;
  std::int64_t overflows = 0;
};

struct SinkDeviation {
  double static_bound_ms = 0.0;
  double observed_max_ms = 0.0;
};

struct DeviationReport {
  std::map<std::string, NodeDeviation> nodes;
  std::map<EdgeId, EdgeDeviation> edges;
  std::map<std::string, SinkDeviation> sinks;
  std::vector<std::string> flags;
};

// Release-instant rounding to whole nanoseconds can stretch a path by a
// nanosecond per hop; bounds are compared with this slack.
inline constexpr double kLatencySlackMs = 1e-5;

inline DeviationReport compare_static_dynamic(const TimingReport& report, const SimMetrics& metrics) {
  DeviationReport d;
  if (metrics.nodes.empty() || metrics.horizon_ms <= 0.0) return d;
  for (const auto& [name, _] : metrics.nodes) {
    if (report.node_timing.count(name) == 0) {
      throw Error(ErrorKind::Mismatch, "node '" + name + "' appears in the metrics but not in the report");
    }
  }
  for (const auto& [name, _] : report.node_timing) {
    if (metrics.nodes.count(name) == 0) {
      throw Error(ErrorKind::Mismatch, "node '" + name + "' appears in the report but not in the metrics");
    }
  }
  for (const auto& [name, nm] : metrics.nodes) {
    const NodeTiming& t = report.node_timing.at(name);
    d.nodes[name] = {t.rate_hz, nm.achieved_hz, std::abs(nm.achieved_hz - t.rate_hz)};
    if (nm.deadline_misses > 0) {
      d.flags.push_back(name + ": " + std::to_string(nm.deadline_misses) + " deadline misses");
    }
    if (nm.skipped_overrun > 0) {
      d.flags.push_back(name + ": " + std::to_string(nm.skipped_overrun) + " firings skipped on overrun");
    }
  }
  for (const auto& [id, em] : metrics.edges) {
    auto alloc = report.edge_buffers.find(id);
    EdgeDeviation& ed = d.edges[id];
    ed.high_water = em.buffer_high_water;
    ed.overflows = em.overflows;
    if (alloc == report.edge_buffers.end()) continue;  // unbounded: nothing guaranteed
    ed.allocated_slots = alloc->second.slots;
    if (em.overflows > 0) d.flags.push_back(id.to_string() + ": " + std::to_string(em.overflows) + " overflows");
    if (em.buffer_high_water > alloc->second.slots) {
      d.flags.push_back(id.to_string() + ": high water " + std::to_string(em.buffer_high_water) + " > " +
                        std::to_string(alloc->second.slots) + " slots");
    }
  }
  for (const auto& [sink, sm] : metrics.sinks) {
    auto bound = report.path_latencies.find(sink);
    if (bound == report.path_latencies.end()) continue;
    d.sinks[sink] = {bound->second, sm.max_ms()};
    if (sm.max_ms() > bound->second + kLatencySlackMs) {
      d.flags.push_back(sink + ": observed latency " + tsdf::detail::fmt_ms(sm.max_ms()) + " ms > bound " +
                        tsdf::detail::fmt_ms(bound->second) + " ms");
    }
  }
  return d;
}

}  // namespace tsdf::sim
