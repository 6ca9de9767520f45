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
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"
#include "tsdf/platform.hpp"

namespace tsdf {

// Aggregate demand placed on one processing element.
struct PeLoad {
  double utilization = 0.0;
  double wcet_sum_ms = 0.0;
  double min_period_ms = std::numeric_limits<double>::infinity();

  void add(double wcet_ms, double rate_hz) {
    utilization += wcet_ms * rate_hz / 1000.0;
    wcet_sum_ms += wcet_ms;
    min_period_ms = std::min(min_period_ms, 1000.0 / rate_hz);
  }

  // Same test the verifier applies at zero margin.
  bool schedulable() const { return utilization <= 1.0 && wcet_sum_ms <= min_period_ms; }
};

namespace detail {

struct Candidate {
  std::string pe;
  std::string config;
  const PerfEntry* entry;
};

inline std::vector<Candidate> candidates(const Platform& platform, const PerfSpec& perf, const std::string& node) {
  std::vector<Candidate> out;
  for (const auto& pe : platform.pes) {
    for (const auto& cfg : perf.configs(node, pe.pe_class)) {
      out.push_back({pe.id, cfg, perf.find(node, pe.pe_class, cfg)});
    }
  }
  return out;
}

// Sum of active power in node-name order, so that equal assignments give
// bit-identical objectives whichever search produced them.
inline double total_power(const Platform& platform, const PerfSpec& perf, const Mapping& m) {
  double total = 0.0;
  for (const auto& [name, p] : m.assignment) {
    if (p.pe == kIoPe) continue;
    total += placed_entry(platform, perf, m, name).power_mw;
  }
  return total;
}

inline void place_io_nodes(const Mdfg& g, Mapping& m) {
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) m.assignment[name] = {kIoPe, ""};
  }
}

}  // namespace detail

using PinMap = std::map<std::string, Placement>;

// Greedy placement: compute nodes in decreasing demand (their smallest
// wcet * rate over the platform), ties by name; each goes to the
// lowest-power (pe, config) that keeps its PE schedulable. Pinned nodes are
// placed first and never moved.
inline Mapping first_fit_map(const Mdfg& g, const Platform& platform, const PerfSpec& perf,
                             const PinMap& pins = {}) {
  Mapping m;
  detail::place_io_nodes(g, m);
  std::map<std::string, PeLoad> load;

  for (const auto& [name, pin] : pins) {
    if (!g.has_node(name) || runs_on_io(g.node(name))) continue;
    m.assignment[name] = pin;
    const PerfEntry& e = placed_entry(platform, perf, m, name);
    load[pin.pe].add(e.latency.wcet_ms(), g.node(name).rate_hz);
  }

  struct Item {
    std::string name;
    double demand;
    std::vector<detail::Candidate> cands;
  };
  std::vector<Item> items;
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n) || pins.count(name)) continue;
    auto cands = detail::candidates(platform, perf, name);
    if (cands.empty()) {
      throw Error(ErrorKind::MissingSpec, "no performance entry for '" + name + "' on any platform PE");
    }
    double demand = std::numeric_limits<double>::infinity();
    for (const auto& c : cands) demand = std::min(demand, c.entry->latency.wcet_ms() * n.rate_hz);
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      return a.entry->power_mw < b.entry->power_mw;
    });
    items.push_back({name, demand, std::move(cands)});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.demand > b.demand;
  });

  for (const auto& item : items) {
    const double rate = g.node(item.name).rate_hz;
    bool placed = false;
    for (const auto& c : item.cands) {
      PeLoad trial = load[c.pe];
      trial.add(c.entry->latency.wcet_ms(), rate);
      if (!trial.schedulable()) continue;
      load[c.pe] = trial;
      m.assignment[item.name] = {c.pe, c.config};
      placed = true;
      break;
    }
    if (!placed) throw Error(ErrorKind::Infeasible, "Unmappable(" + item.name + ")");
  }
  m.objective_mw = detail::total_power(platform, perf, m);
  return m;
}

// Pins plus the lowest-power candidate for every other compute node, with
// no schedulability test. Lets the verifier explain why no feasible mapping
// exists instead of stopping at the first unplaceable node.
inline Mapping cheapest_map(const Mdfg& g, const Platform& platform, const PerfSpec& perf,
                            const PinMap& pins = {}) {
  Mapping m;
  detail::place_io_nodes(g, m);
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) continue;
    if (auto pin = pins.find(name); pin != pins.end()) {
      m.assignment[name] = pin->second;
      continue;
    }
    const auto cands = detail::candidates(platform, perf, name);
    if (cands.empty()) continue;
    const auto best = std::min_element(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      return a.entry->power_mw < b.entry->power_mw;
    });
    m.assignment[name] = {best->pe, best->config};
  }
  return m;
}

inline constexpr std::size_t kExhaustiveNodeLimit = 10;

// Minimum total active power over every schedulable assignment. Candidates
// are enumerated in (pe, config) order per node, nodes by name, and only a
// strictly better objective replaces the incumbent, so ties resolve to the
// lexicographically smallest assignment.
inline Mapping exhaustive_map(const Mdfg& g, const Platform& platform, const PerfSpec& perf,
                              const PinMap& pins = {}) {
  if (g.nodes.size() > kExhaustiveNodeLimit) {
    throw Error(ErrorKind::SearchSpaceTooLarge,
                "exhaustive mapping supports at most " + std::to_string(kExhaustiveNodeLimit) + " nodes");
  }
  std::vector<std::string> names;
  std::vector<std::vector<detail::Candidate>> cands;
  for (const auto& [name, n] : g.nodes) {
    if (runs_on_io(n)) continue;
    auto c = detail::candidates(platform, perf, name);
    if (auto pin = pins.find(name); pin != pins.end()) {
      std::erase_if(c, [&](const auto& x) { return x.pe != pin->second.pe || x.config != pin->second.config; });
    }
    if (c.empty()) {
      throw Error(ErrorKind::MissingSpec, "no performance entry for '" + name + "' on any platform PE");
    }
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return std::tie(a.pe, a.config) < std::tie(b.pe, b.config);
    });
    names.push_back(name);
    cands.push_back(std::move(c));
  }

  std::vector<std::size_t> choice(names.size(), 0);
  std::vector<std::size_t> best;
  double best_power = std::numeric_limits<double>::infinity();
  std::map<std::string, PeLoad> load;

  auto recurse = [&](auto&& self, std::size_t i, double power) -> void {
    if (i == names.size()) {
      if (power < best_power) {
        best_power = power;
        best = choice;
      }
      return;
    }
    const double rate = g.node(names[i]).rate_hz;
    for (std::size_t k = 0; k < cands[i].size(); ++k) {
      const auto& c = cands[i][k];
      const PeLoad saved = load[c.pe];
      load[c.pe].add(c.entry->latency.wcet_ms(), rate);
      if (load[c.pe].schedulable()) {
        choice[i] = k;
        self(self, i + 1, power + c.entry->power_mw);
      }
      load[c.pe] = saved;
    }
  };
  recurse(recurse, 0, 0.0);

  if (best.size() != names.size()) throw Error(ErrorKind::Infeasible, "Infeasible: no schedulable assignment");
  Mapping m;
  detail::place_io_nodes(g, m);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& c = cands[i][best[i]];
    m.assignment[names[i]] = {c.pe, c.config};
  }
  m.objective_mw = detail::total_power(platform, perf, m);
  return m;
}

}  // namespace tsdf
