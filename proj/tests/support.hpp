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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tsdf/tsdf.hpp"

namespace tsdf::fixtures {

inline std::filesystem::path source_dir() { return TSDF_SOURCE_DIR; }
inline std::filesystem::path program_path(const std::string& name) { return source_dir() / "programs" / name; }

inline std::string program_text(const std::string& name) { return io::read_file(program_path(name)); }

inline dsl::Lowered load_lowered(const std::string& name) { return dsl::lower(dsl::parse(program_text(name))); }

inline Platform load_platform(const std::string& name) {
  return io::platform_from_json(io::parse_json(program_text(name), name));
}

inline PerfSpec load_perf(const std::string& name) { return io::perf_from_json(io::parse_json(program_text(name), name)); }

inline NodeSpec make_node(const std::string& name, NodeKind kind, double hz, std::int64_t bytes,
                          std::vector<std::string> ports = {}) {
  NodeSpec n;
  n.name = name;
  n.kind = kind;
  n.rate_hz = hz;
  n.token_bytes = bytes;
  n.ports = std::move(ports);
  return n;
}

inline void add_node(Mdfg& g, NodeSpec n) {
  const std::string name = n.name;
  g.nodes.emplace(name, std::move(n));
}

// The home-robot graph built by hand, independent of the parser.
inline Mdfg robot_vacuum_graph() {
  Mdfg g;
  add_node(g, make_node("IR", NodeKind::Sensor, 50, 16));
  add_node(g, make_node("Camera", NodeKind::Sensor, 30, 230400));
  add_node(g, make_node("IMU", NodeKind::Sensor, 100, 64));
  add_node(g, make_node("WO", NodeKind::Sensor, 50, 32));
  add_node(g, make_node("2DPerception", NodeKind::Compute, 50, 2000, {"in0", "in1"}));
  add_node(g, make_node("Localization", NodeKind::Compute, 50, 200, {"in0", "in1", "in2"}));
  add_node(g, make_node("Control", NodeKind::Compute, 50, 100, {"in0", "in1"}));
  g.edges = {{"IR", "2DPerception", "in0"},          {"Camera", "2DPerception", "in1"},
             {"Camera", "Localization", "in0"},      {"IMU", "Localization", "in1"},
             {"WO", "Localization", "in2"},          {"2DPerception", "Control", "in0"},
             {"Localization", "Control", "in1"}};
  g.outputs = {"Control"};
  return g;
}

inline PerfEntry fixed(double wcet_ms, double power_mw = 100.0) {
  PerfEntry e;
  e.latency.base_ms = wcet_ms;
  e.power_mw = power_mw;
  return e;
}

// One generated instance: a connected DAG of at most eight nodes with a
// platform, specs and a first-fit mapping when one exists.
struct Case {
  std::uint32_t seed = 0;
  Mdfg graph;
  Platform platform;
  PerfSpec perf;
  std::optional<Mapping> mapping;
  TimingReport report;
};

inline Case random_case(std::uint32_t seed) {
  std::mt19937 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  static const double kRates[] = {10, 20, 25, 40, 50, 100};

  Case c;
  c.seed = seed;
  Mdfg& g = c.graph;
  const int total = pick(2, 8);
  const int sensors = std::min(pick(1, 3), total - 1);
  const bool actuator = total - sensors >= 2 && coin(0.4);
  const int computes = total - sensors - (actuator ? 1 : 0);

  std::vector<std::string> order;
  std::vector<std::string> unused;
  for (int i = 0; i < sensors; ++i) {
    const std::string name = "S" + std::to_string(i);
    add_node(g, make_node(name, NodeKind::Sensor, kRates[pick(0, 5)], pick(1, 4096)));
    order.push_back(name);
    if (i > 0) unused.push_back(name);
  }
  std::vector<std::string> connected{"S0"};

  auto add_input = [&](NodeSpec& n, const std::string& producer) {
    const std::string port = "in" + std::to_string(n.ports.size());
    n.ports.push_back(port);
    const NodeSpec& p = g.nodes.at(producer);
    Policy policy = Policy::latest();
    const int r = pick(0, 9);
    if (r >= 6 && r <= 7) policy = Policy::window(pick(2, 4));
    if (r >= 8 && (n.rate_hz >= p.rate_hz || coin(0.15))) policy = Policy::fifo();
    g.edges.push_back({producer, n.name, port, policy});
  };

  for (int i = 0; i < computes; ++i) {
    NodeSpec n = make_node("C" + std::to_string(i), NodeKind::Compute, kRates[pick(0, 5)], pick(1, 2048));
    std::vector<std::string> producers{connected[pick(0, static_cast<int>(connected.size()) - 1)]};
    if (!unused.empty()) {
      producers.push_back(unused.back());
      unused.pop_back();
    }
    if (coin(0.3)) {
      const auto& extra = order[pick(0, static_cast<int>(order.size()) - 1)];
      if (std::find(producers.begin(), producers.end(), extra) == producers.end()) producers.push_back(extra);
    }
    for (const auto& p : producers) add_input(n, p);
    for (const auto& p : producers) {
      if (std::find(connected.begin(), connected.end(), p) == connected.end()) connected.push_back(p);
    }
    connected.push_back(n.name);
    order.push_back(n.name);
    add_node(g, std::move(n));
  }
  // Sensors not yet consumed feed the last compute node.
  if (!unused.empty()) {
    NodeSpec& last = g.nodes.at(order.back());
    for (const auto& s : unused) add_input(last, s);
  }
  if (actuator) {
    NodeSpec a = make_node("A0", NodeKind::Actuator, kRates[pick(0, 5)], 0);
    add_input(a, order.back());
    add_node(g, std::move(a));
  }

  const int pes = pick(1, 3);
  static const PeClass kClasses[] = {PeClass::CPU, PeClass::GPU, PeClass::DSP};
  for (int i = 0; i < pes; ++i) c.platform.pes.push_back({"pe" + std::to_string(i), kClasses[i]});
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) continue;
    for (int i = 0; i < pes; ++i) {
      if (i > 0 && coin(0.3)) continue;
      const double frac = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
      PerfEntry e;
      e.latency.base_ms = std::round(n.period_ms() * frac * 0.6 * 1000.0) / 1000.0;
      e.latency.slope_ms_per_unit = std::round(n.period_ms() * frac * 0.4 * 10.0) / 1000.0;
      e.latency.workload_max = 100.0;
      e.power_mw = pick(50, 900);
      c.perf.add(name, kClasses[i], kDefaultConfig, e);
    }
  }
  try {
    c.mapping = first_fit_map(g, c.platform, c.perf);
    c.report = verify(g, {}, c.platform, c.perf, *c.mapping);
  } catch (const Error&) {
    c.mapping.reset();
  }
  return c;
}

inline std::vector<Case> corpus(std::size_t n, std::uint32_t base_seed = 1) {
  std::vector<Case> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(random_case(base_seed + i));
  return out;
}

// Two-node fixture that keeps one edge's buffer under maximum pressure: the
// consumer is busy for its whole period so every token it reads stays
// pinned, and its phase sits off the producer's grid.
struct StressFixture {
  Mdfg graph;
  Platform platform;
  PerfSpec perf;
  Mapping mapping;
  sim::SimOptions options;
  EdgeId edge;
};

inline StressFixture stress_fixture(double producer_hz, double consumer_hz, Policy policy) {
  StressFixture f;
  add_node(f.graph, make_node("P", NodeKind::Sensor, producer_hz, 8));
  add_node(f.graph, make_node("C", NodeKind::Compute, consumer_hz, 8, {"in0"}));
  f.graph.edges.push_back({"P", "C", "in0", policy});
  f.edge = f.graph.edges.front().id();
  f.platform.pes.push_back({"pe0", PeClass::CPU});
  // A Fifo consumer at least twice as fast as its producer releases every
  // token within one producer period when it meets its own deadline, so the
  // second slot only matters once a job spans most of a producer period.
  const bool slow_fifo = policy.is_fifo() && 2.0 * producer_hz <= consumer_hz;
  f.perf.add("C", PeClass::CPU, kDefaultConfig, fixed(slow_fifo ? 950.0 / producer_hz : 1000.0 / consumer_hz));
  f.mapping.assignment = {{"P", {kIoPe, ""}}, {"C", {"pe0", kDefaultConfig}}};
  f.options.horizon_ms = 2000.0 + 12.0 * std::max(1000.0 / producer_hz, 1000.0 / consumer_hz) *
                                      std::max(1, policy.window_size());
  f.options.phase_ms["C"] = 500.0 / consumer_hz + 0.137;
  f.options.record_events = false;
  return f;
}

// Random monotone knob space: latency falls and power grows with every
// knob value.
inline accel::KnobSpace random_space(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  accel::KnobSpace s;
  const int knobs = pick(1, 4);
  std::uint64_t size = 1;
  for (int i = 0; i < knobs; ++i) {
    const int max_values = static_cast<int>(std::min<std::uint64_t>(10, 10000 / size));
    const int n = pick(1, std::max(1, max_values));
    size *= n;
    accel::Knob k{"k" + std::to_string(i), {}};
    double v = pick(1, 4);
    for (int j = 0; j < n; ++j) {
      k.values.push_back(v);
      v += pick(1, 4);
    }
    s.knobs.push_back(std::move(k));
  }
  const int stages = pick(1, 5);
  for (int i = 0; i < stages; ++i) {
    accel::Stage st;
    st.name = "st" + std::to_string(i);
    st.latency.knob = s.knobs[pick(0, knobs - 1)].name;
    st.latency.c0 = real(0, 2);
    st.latency.c1 = pick(0, 3) ? real(0, 20) : 0.0;
    st.latency.slope1 = pick(0, 1) ? real(0, 0.2) : 0.0;
    st.latency.slope0 = pick(0, 1) ? real(0, 0.01) : 0.0;
    if (pick(0, 3) == 0) {
      st.latency.pair_knob = s.knobs[pick(0, knobs - 1)].name;
      st.latency.pair_c = real(0, 30);
    }
    st.power.knob = s.knobs[pick(0, knobs - 1)].name;
    st.power.p0 = real(0, 5);
    st.power.p1 = real(0, 10);
    s.stages.push_back(std::move(st));
  }
  s.static_mw = real(0, 100);
  return s;
}

// Deadline drawn between the fastest and the slowest configuration.
inline double random_deadline(std::mt19937& rng, const accel::KnobSpace& s, double workload) {
  accel::Config fast(s.knobs.size()), slow(s.knobs.size(), 0);
  for (std::size_t k = 0; k < s.knobs.size(); ++k) fast[k] = static_cast<int>(s.knobs[k].values.size()) - 1;
  const double lo = accel::evaluate(s, fast).latency_at(workload);
  const double hi = accel::evaluate(s, slow).latency_at(workload);
  return lo + std::uniform_real_distribution<double>(0, 1)(rng) * (hi - lo);
}

}  // namespace tsdf::fixtures
