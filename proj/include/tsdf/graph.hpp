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
#include <compare>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tsdf/error.hpp"

namespace tsdf {

enum class NodeKind { Sensor, Compute, Actuator };

inline const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Sensor: return "sensor";
    case NodeKind::Compute: return "compute";
    case NodeKind::Actuator: return "actuator";
  }
  return "?";
}

inline std::optional<NodeKind> parse_node_kind(const std::string& text) {
  if (text == "sensor") return NodeKind::Sensor;
  if (text == "compute") return NodeKind::Compute;
  if (text == "actuator") return NodeKind::Actuator;
  return std::nullopt;
}

// Names are ASCII words over [A-Za-z0-9_] holding at least one letter, so
// that "2DPerception" is a name while "50" is not.
inline bool is_identifier(const std::string& name) {
  if (name.empty()) return false;
  bool has_letter = false;
  for (char c : name) {
    const bool alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    const bool digit = c >= '0' && c <= '9';
    if (!alpha && !digit && c != '_') return false;
    has_letter = has_letter || alpha;
  }
  return has_letter && name.front() != '_';
}

// Edge consumption policy. Window(1) is canonicalized to Latest on
// construction, so only three shapes ever reach analysis code.
class Policy {
 public:
  enum class Kind { Latest, Window, Fifo };

  static Policy latest() { return Policy(Kind::Latest, 1); }
  static Policy fifo() { return Policy(Kind::Fifo, 1); }
  static Policy window(int k) {
    if (k < 1) {
      throw Error(ErrorKind::InvalidGraph,
                  "window size must be >= 1, got " + std::to_string(k));
    }
    return k == 1 ? latest() : Policy(Kind::Window, k);
  }

  Kind kind() const noexcept { return kind_; }
  // Number of tokens a single firing reads from the edge.
  int window_size() const noexcept { return k_; }

  bool is_latest() const noexcept { return kind_ == Kind::Latest; }
  bool is_window() const noexcept { return kind_ == Kind::Window; }
  bool is_fifo() const noexcept { return kind_ == Kind::Fifo; }

  std::string to_string() const {
    switch (kind_) {
      case Kind::Latest: return "latest";
      case Kind::Window: return "window(" + std::to_string(k_) + ")";
      case Kind::Fifo: return "fifo";
    }
    return "?";
  }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  Policy(Kind kind, int k) : kind_(kind), k_(k) {}

  Kind kind_;
  int k_;
};

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::Compute;
  double rate_hz = 0.0;
  std::int64_t token_bytes = 0;
  std::vector<std::string> ports;
  std::map<std::string, std::string> attrs;

  double period_ms() const { return 1000.0 / rate_hz; }

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct EdgeId {
  std::string producer;
  std::string consumer;
  std::string port;

  std::string to_string() const { return producer + "->" + consumer + "." + port; }

  friend auto operator<=>(const EdgeId&, const EdgeId&) = default;
  friend bool operator==(const EdgeId&, const EdgeId&) = default;
};

struct EdgeSpec {
  std::string producer;
  std::string consumer;
  std::string port;
  Policy policy = Policy::latest();

  EdgeId id() const { return {producer, consumer, port}; }

  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

// Macro-dataflow graph. Plain value type; analyses never mutate it.
struct Mdfg {
  std::map<std::string, NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<std::string> outputs;

  const NodeSpec& node(const std::string& name) const {
    auto it = nodes.find(name);
    if (it == nodes.end()) {
      throw Error(ErrorKind::InvalidGraph, "unknown node '" + name + "'");
    }
    return it->second;
  }

  bool has_node(const std::string& name) const { return nodes.count(name) != 0; }

  std::vector<const EdgeSpec*> in_edges(const std::string& name) const {
    std::vector<const EdgeSpec*> out;
    for (const auto& e : edges) {
      if (e.consumer == name) out.push_back(&e);
    }
    return out;
  }

  std::vector<const EdgeSpec*> out_edges(const std::string& name) const {
    std::vector<const EdgeSpec*> out;
    for (const auto& e : edges) {
      if (e.producer == name) out.push_back(&e);
    }
    return out;
  }

  friend bool operator==(const Mdfg&, const Mdfg&) = default;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCategory {
  Cycle,
  DanglingPort,
  SensorWithInput,
  DuplicateEdge,
  Disconnected,
  BadRate,
  BadIdentifier,
  UnknownNode,
};

inline const char* to_string(ViolationCategory c) {
  switch (c) {
    case ViolationCategory::Cycle: return "Cycle";
    case ViolationCategory::DanglingPort: return "DanglingPort";
    case ViolationCategory::SensorWithInput: return "SensorWithInput";
    case ViolationCategory::DuplicateEdge: return "DuplicateEdge";
    case ViolationCategory::Disconnected: return "Disconnected";
    case ViolationCategory::BadRate: return "BadRate";
    case ViolationCategory::BadIdentifier: return "BadIdentifier";
    case ViolationCategory::UnknownNode: return "UnknownNode";
  }
  return "?";
}

enum class Severity { Error, Warning };

struct Violation {
  ViolationCategory category;
  Severity severity = Severity::Error;
  std::string subject;  // node name, edge id or cycle path
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool empty() const { return violations.empty(); }
  bool ok() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return v.severity == Severity::Error; });
  }
  std::vector<Violation> of(ViolationCategory c) const {
    std::vector<Violation> out;
    for (const auto& v : violations) {
      if (v.category == c) out.push_back(v);
    }
    return out;
  }

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

namespace detail {

inline std::map<std::string, std::vector<std::string>> successors(const Mdfg& g) {
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& [name, _] : g.nodes) succ[name];
  for (const auto& e : g.edges) {
    if (g.has_node(e.producer) && g.has_node(e.consumer)) {
      succ[e.producer].push_back(e.consumer);
    }
  }
  for (auto& [_, list] : succ) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return succ;
}

// Hop distance from the nearest node without predecessors; nodes reachable
// only through a cycle get the maximum value.
inline std::map<std::string, std::size_t> source_distance(const std::map<std::string, std::vector<std::string>>& succ) {
  std::map<std::string, std::size_t> indeg;
  std::map<std::string, std::size_t> dist;
  for (const auto& [n, _] : succ) {
    indeg[n];
    dist[n] = std::numeric_limits<std::size_t>::max();
  }
  for (const auto& [_, list] : succ) {
    for (const auto& v : list) ++indeg[v];
  }
  std::deque<std::string> queue;
  for (const auto& [n, d] : indeg) {
    if (d == 0) {
      dist[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const std::string u = queue.front();
    queue.pop_front();
    for (const auto& v : succ.at(u)) {
      if (dist[v] == std::numeric_limits<std::size_t>::max()) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

// Every elementary cycle closed by a DFS back edge, rotated to start at the
// member nearest the graph's sources (ties by name), which is where data
// enters the loop. Exhaustive for reporting purposes: a graph has a cycle
// iff at least one entry is returned.
inline std::vector<std::vector<std::string>> find_cycles(const Mdfg& g) {
  const auto succ = successors(g);
  const auto dist = source_distance(succ);
  auto entry_less = [&](const std::string& a, const std::string& b) {
    return std::pair(dist.at(a), a) < std::pair(dist.at(b), b);
  };
  enum class Mark { White, Grey, Black };
  std::map<std::string, Mark> mark;
  for (const auto& [name, _] : succ) mark[name] = Mark::White;

  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> cycles;
  std::vector<std::string> stack;

  struct Frame {
    std::string node;
    std::size_t next = 0;
  };

  for (const auto& [root, _] : succ) {
    if (mark[root] != Mark::White) continue;
    std::vector<Frame> frames{{root, 0}};
    mark[root] = Mark::Grey;
    stack.push_back(root);
    while (!frames.empty()) {
      Frame& top = frames.back();
      const auto& next = succ.at(top.node);
      if (top.next < next.size()) {
        const std::string& v = next[top.next++];
        if (mark[v] == Mark::White) {
          mark[v] = Mark::Grey;
          stack.push_back(v);
          frames.push_back({v, 0});
        } else if (mark[v] == Mark::Grey) {
          auto from = std::find(stack.begin(), stack.end(), v);
          std::vector<std::string> cyc(from, stack.end());
          std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end(), entry_less), cyc.end());
          if (seen.insert(cyc).second) cycles.push_back(cyc);
        }
      } else {
        mark[top.node] = Mark::Black;
        stack.pop_back();
        frames.pop_back();
      }
    }
  }
  return cycles;
}

inline std::size_t weak_components(const Mdfg& g) {
  std::map<std::string, std::string> parent;
  for (const auto& [name, _] : g.nodes) parent[name] = name;
  auto find = [&](std::string x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) {
    if (!g.has_node(e.producer) || !g.has_node(e.consumer)) continue;
    auto a = find(e.producer);
    auto b = find(e.consumer);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::set<std::string> roots;
  for (const auto& [name, _] : g.nodes) roots.insert(find(name));
  return roots.size();
}

}  // namespace detail

inline ValidationReport validate_graph(const Mdfg& g) {
  ValidationReport report;
  auto add = [&](ViolationCategory c, std::string subject, std::string message,
                 Severity s = Severity::Error) {
    report.violations.push_back({c, s, std::move(subject), std::move(message)});
  };

  for (const auto& [key, n] : g.nodes) {
    if (key != n.name) {
      add(ViolationCategory::BadIdentifier, key, "node key '" + key + "' differs from node name '" + n.name + "'");
    }
    if (!is_identifier(n.name)) {
      add(ViolationCategory::BadIdentifier, n.name, "'" + n.name + "' is not a valid identifier");
    }
    if (!(n.rate_hz > 0.0) || !std::isfinite(n.rate_hz)) {
      add(ViolationCategory::BadRate, n.name, "rate must be a positive finite frequency");
    }
    if (n.token_bytes < 0) {
      add(ViolationCategory::BadRate, n.name, "token size must be >= 0 bytes");
    } else if (n.kind == NodeKind::Actuator && n.token_bytes != 0) {
      add(ViolationCategory::BadRate, n.name, "actuator must not emit tokens");
    } else if (n.kind != NodeKind::Actuator && n.token_bytes == 0) {
      add(ViolationCategory::BadRate, n.name, "only actuators may have zero-size tokens");
    }
    if (n.kind == NodeKind::Sensor && !n.ports.empty()) {
      add(ViolationCategory::SensorWithInput, n.name, "sensor declares input ports");
    }
    if (n.kind == NodeKind::Actuator && n.ports.empty()) {
      add(ViolationCategory::DanglingPort, n.name, "actuator has no input ports");
    }
    std::set<std::string> port_names;
    for (const auto& p : n.ports) {
      if (!port_names.insert(p).second) {
        add(ViolationCategory::DuplicateEdge, n.name + "." + p, "port declared twice");
      }
    }
  }

  std::map<std::pair<std::string, std::string>, int> port_use;
  for (const auto& e : g.edges) {
    const std::string id = e.id().to_string();
    if (!g.has_node(e.producer)) {
      add(ViolationCategory::UnknownNode, id, "producer '" + e.producer + "' does not exist");
    }
    if (!g.has_node(e.consumer)) {
      add(ViolationCategory::UnknownNode, id, "consumer '" + e.consumer + "' does not exist");
      continue;
    }
    const NodeSpec& c = g.nodes.at(e.consumer);
    if (c.kind == NodeKind::Sensor) {
      add(ViolationCategory::SensorWithInput, id, "edge feeds sensor '" + c.name + "'");
      continue;
    }
    if (std::find(c.ports.begin(), c.ports.end(), e.port) == c.ports.end()) {
      add(ViolationCategory::DanglingPort, id, "port '" + e.port + "' not declared on '" + c.name + "'");
    }
    if (++port_use[{e.consumer, e.port}] == 2) {
      add(ViolationCategory::DuplicateEdge, e.consumer + "." + e.port, "port has more than one incoming edge");
    }
  }
  for (const auto& [_, n] : g.nodes) {
    if (n.kind == NodeKind::Sensor) continue;
    for (const auto& p : n.ports) {
      if (port_use.count({n.name, p}) == 0) {
        add(ViolationCategory::DanglingPort, n.name + "." + p, "port is not connected");
      }
    }
  }

  for (const auto& cyc : detail::find_cycles(g)) {
    std::string path;
    for (const auto& n : cyc) path += n + "->";
    path += cyc.front();
    add(ViolationCategory::Cycle, path,
        cyc.size() == 1 ? "node feeds itself (nodes are stateless)" : "graph is not acyclic");
  }

  for (const auto& o : g.outputs) {
    if (!g.has_node(o)) add(ViolationCategory::UnknownNode, o, "output names an unknown node");
  }

  if (!g.nodes.empty() && detail::weak_components(g) > 1) {
    add(ViolationCategory::Disconnected, "graph", "graph is not weakly connected", Severity::Warning);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ordering

// Longest-path depth of every node, computed by layered Kahn elimination.
inline std::map<std::string, int> topo_depths(const Mdfg& g) {
  std::map<std::string, int> indeg;
  for (const auto& [name, _] : g.nodes) indeg[name] = 0;
  for (const auto& e : g.edges) {
    if (g.has_node(e.producer) && g.has_node(e.consumer)) ++indeg[e.consumer];
  }
  std::map<std::string, int> depth;
  std::vector<std::string> layer;
  for (const auto& [name, d] : indeg) {
    if (d == 0) layer.push_back(name);
  }
  int level = 0;
  while (!layer.empty()) {
    std::vector<std::string> next;
    for (const auto& n : layer) {
      depth[n] = level;
      for (const auto* e : g.out_edges(n)) {
        if (g.has_node(e->consumer) && --indeg[e->consumer] == 0) next.push_back(e->consumer);
      }
    }
    std::sort(next.begin(), next.end());
    layer = std::move(next);
    ++level;
  }
  if (depth.size() != g.nodes.size()) {
    throw Error(ErrorKind::InvalidGraph, "graph contains a cycle; no topological order exists");
  }
  return depth;
}

// Producers before consumers; nodes in the same elimination layer are
// ordered by name.
inline std::vector<std::string> topo_order(const Mdfg& g) {
  const auto depth = topo_depths(g);
  std::vector<std::string> order;
  order.reserve(depth.size());
  for (const auto& [name, _] : depth) order.push_back(name);
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return depth.at(a) < depth.at(b);
  });
  return order;
}

// ---------------------------------------------------------------------------
// Bandwidth

struct BandwidthProfile {
  std::map<EdgeId, double> per_edge;  // bytes/s
  std::map<int, double> per_stage;    // producer depth -> bytes/s
  double total_input = 0.0;           // sum of sensor output streams
  double total_output = 0.0;          // sum of edges into actuators

  // Strictly decreasing per-stage volume.
  bool is_funnel() const {
    std::optional<double> prev;
    for (const auto& [_, v] : per_stage) {
      if (prev && !(v < *prev)) return false;
      prev = v;
    }
    return true;
  }
};

inline BandwidthProfile bandwidth_profile(const Mdfg& g) {
  const auto depth = topo_depths(g);
  BandwidthProfile p;
  for (const auto& e : g.edges) {
    const NodeSpec& prod = g.node(e.producer);
    const double bps = prod.rate_hz * static_cast<double>(prod.token_bytes);
    p.per_edge[e.id()] = bps;
    p.per_stage[depth.at(e.producer)] += bps;
    if (g.node(e.consumer).kind == NodeKind::Actuator) p.total_output += bps;
  }
  for (const auto& [_, n] : g.nodes) {
    if (n.kind == NodeKind::Sensor) p.total_input += n.rate_hz * static_cast<double>(n.token_bytes);
  }
  return p;
}

}  // namespace tsdf
