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
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"

namespace tsdf {

enum class PeClass { CPU, GPU, DSP, ACCEL };

inline const char* to_string(PeClass c) {
  switch (c) {
    case PeClass::CPU: return "CPU";
    case PeClass::GPU: return "GPU";
    case PeClass::DSP: return "DSP";
    case PeClass::ACCEL: return "ACCEL";
  }
  return "?";
}

inline std::optional<PeClass> parse_pe_class(const std::string& s) {
  if (s == "CPU") return PeClass::CPU;
  if (s == "GPU") return PeClass::GPU;
  if (s == "DSP") return PeClass::DSP;
  if (s == "ACCEL") return PeClass::ACCEL;
  return std::nullopt;
}

// Sensors and actuators are placed here. It has no capacity limit and
// every job on it completes instantly.
inline const std::string kIoPe = "io";

struct Pe {
  std::string id;
  PeClass pe_class = PeClass::CPU;

  friend bool operator==(const Pe&, const Pe&) = default;
};

struct Platform {
  std::vector<Pe> pes;

  const Pe* find(const std::string& id) const {
    for (const auto& p : pes) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }
};

// Latency grows linearly with a workload measure such as the number of
// tracked feature points.
struct LatencyModel {
  double base_ms = 0.0;
  double slope_ms_per_unit = 0.0;
  double workload_max = 0.0;
  std::optional<double> workload_mean;

  double at(double workload) const { return base_ms + slope_ms_per_unit * workload; }
  double wcet_ms() const { return at(workload_max); }
  double acet_ms() const { return at(workload_mean.value_or(workload_max / 2.0)); }

  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

struct PerfEntry {
  LatencyModel latency;
  double power_mw = 0.0;
  double idle_mw = 0.0;

  friend bool operator==(const PerfEntry&, const PerfEntry&) = default;
};

struct PerfKey {
  std::string node;
  PeClass pe_class = PeClass::CPU;
  std::string config;

  friend auto operator<=>(const PerfKey&, const PerfKey&) = default;
  friend bool operator==(const PerfKey&, const PerfKey&) = default;
};

inline const std::string kDefaultConfig = "default";

struct PerfSpec {
  std::map<PerfKey, PerfEntry> entries;

  const PerfEntry* find(const std::string& node, PeClass c, const std::string& config) const {
    auto it = entries.find({node, c, config});
    return it == entries.end() ? nullptr : &it->second;
  }

  // Config ids available for (node, class), ascending.
  std::vector<std::string> configs(const std::string& node, PeClass c) const {
    std::vector<std::string> out;
    for (auto it = entries.lower_bound({node, c, ""}); it != entries.end(); ++it) {
      if (it->first.node != node || it->first.pe_class != c) break;
      out.push_back(it->first.config);
    }
    return out;
  }

  void add(const std::string& node, PeClass c, const std::string& config, PerfEntry e) {
    entries[{node, c, config}] = std::move(e);
  }
};

// Throws InvalidModel naming the first entry that breaks wcet >= acet > 0.
inline void check_perf_spec(const PerfSpec& spec) {
  for (const auto& [k, e] : spec.entries) {
    const std::string who = k.node + "/" + to_string(k.pe_class) + "/" + k.config;
    const auto& m = e.latency;
    if (m.base_ms < 0 || m.slope_ms_per_unit < 0 || m.workload_max < 0 || e.power_mw < 0 || e.idle_mw < 0) {
      throw Error(ErrorKind::InvalidModel, who + ": coefficients must be non-negative");
    }
    if (m.workload_mean && (*m.workload_mean < 0 || *m.workload_mean > m.workload_max)) {
      throw Error(ErrorKind::InvalidModel, who + ": workload_mean must lie in [0, workload_max]");
    }
    if (!(m.acet_ms() > 0.0) || m.wcet_ms() < m.acet_ms()) {
      throw Error(ErrorKind::InvalidModel, who + ": requires wcet >= acet > 0");
    }
  }
}

struct Placement {
  std::string pe;
  std::string config = kDefaultConfig;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct Mapping {
  std::map<std::string, Placement> assignment;
  double objective_mw = 0.0;

  friend bool operator==(const Mapping&, const Mapping&) = default;
};

inline bool runs_on_io(const NodeSpec& n) { return n.kind != NodeKind::Compute; }

// The spec entry a placed compute node runs with. Throws MissingSpec.
inline const PerfEntry& placed_entry(const Platform& platform, const PerfSpec& perf,
                                     const Mapping& mapping, const std::string& node) {
  auto it = mapping.assignment.find(node);
  if (it == mapping.assignment.end()) {
    throw Error(ErrorKind::MissingSpec, "node '" + node + "' is not mapped to any processing element");
  }
  const Pe* pe = platform.find(it->second.pe);
  if (pe == nullptr) {
    throw Error(ErrorKind::MissingSpec, "node '" + node + "' is mapped to unknown PE '" + it->second.pe + "'");
  }
  const PerfEntry* e = perf.find(node, pe->pe_class, it->second.config);
  if (e == nullptr) {
    throw Error(ErrorKind::MissingSpec, "MissingSpec(" + node + ", " + to_string(pe->pe_class) +
                                            ", " + it->second.config + ")");
  }
  return *e;
}

}  // namespace tsdf
