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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "tsdf/accelgen.hpp"
#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"
#include "tsdf/platform.hpp"
#include "tsdf/sim.hpp"
#include "tsdf/verifier.hpp"

// File formats. Schemas are documented under docs/schemas/.

namespace tsdf::io {

using nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorKind::Io, "short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename '" + tmp + "' to '" + path.string() + "': " + ec.message());
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, what + ": " + e.what());
  }
}

namespace detail {

template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, what + ": " + e.what());
  }
}

inline PeClass pe_class_of(const json& j, const std::string& what) {
  auto c = parse_pe_class(j.get<std::string>());
  if (!c) throw Error(ErrorKind::Parse, what + ": unknown PE class '" + j.get<std::string>() + "'");
  return *c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Platform: {"pes": [{"id": "cpu0", "class": "CPU"}, ...]}

inline Platform platform_from_json(const json& j) {
  return detail::guarded("platform", [&] {
    Platform p;
    for (const auto& pe : j.at("pes")) {
      Pe x{pe.at("id").get<std::string>(), detail::pe_class_of(pe.at("class"), "platform")};
      if (x.id == kIoPe) throw Error(ErrorKind::Parse, "platform: PE id 'io' is reserved");
      if (p.find(x.id)) throw Error(ErrorKind::Parse, "platform: duplicate PE id '" + x.id + "'");
      p.pes.push_back(std::move(x));
    }
    return p;
  });
}

inline json to_json(const Platform& p) {
  json pes = json::array();
  for (const auto& pe : p.pes) pes.push_back({{"id", pe.id}, {"class", to_string(pe.pe_class)}});
  return {{"pes", pes}};
}

// ---------------------------------------------------------------------------
// PerfSpec: {"entries": [{"node", "pe_class", "config", "base_ms",
//            "slope_ms_per_unit", "workload_max", "workload_mean"?,
//            "power_mw", "idle_mw"}]}

inline PerfSpec perf_from_json(const json& j) {
  PerfSpec spec = detail::guarded("perf", [&] {
    PerfSpec s;
    for (const auto& e : j.at("entries")) {
      PerfEntry pe;
      pe.latency.base_ms = e.at("base_ms").get<double>();
      pe.latency.slope_ms_per_unit = e.value("slope_ms_per_unit", 0.0);
      pe.latency.workload_max = e.value("workload_max", 0.0);
      if (e.contains("workload_mean")) pe.latency.workload_mean = e.at("workload_mean").get<double>();
      pe.power_mw = e.value("power_mw", 0.0);
      pe.idle_mw = e.value("idle_mw", 0.0);
      s.add(e.at("node").get<std::string>(), detail::pe_class_of(e.at("pe_class"), "perf"),
            e.value("config", kDefaultConfig), pe);
    }
    return s;
  });
  check_perf_spec(spec);
  return spec;
}

inline json to_json(const PerfSpec& s) {
  json entries = json::array();
  for (const auto& [k, e] : s.entries) {
    json x = {{"node", k.node},
              {"pe_class", to_string(k.pe_class)},
              {"config", k.config},
              {"base_ms", e.latency.base_ms},
              {"slope_ms_per_unit", e.latency.slope_ms_per_unit},
              {"workload_max", e.latency.workload_max},
              {"power_mw", e.power_mw},
              {"idle_mw", e.idle_mw},
              {"wcet_ms", e.latency.wcet_ms()},
              {"acet_ms", e.latency.acet_ms()}};
    if (e.latency.workload_mean) x["workload_mean"] = *e.latency.workload_mean;
    entries.push_back(std::move(x));
  }
  return {{"entries", entries}};
}

// ---------------------------------------------------------------------------
// Mapping / pin file: {"assignment": {"node": {"pe": "cpu0", "config": "default"}}}

inline Mapping mapping_from_json(const json& j) {
  return detail::guarded("mapping", [&] {
    Mapping m;
    for (const auto& [node, p] : j.at("assignment").items()) {
      m.assignment[node] = {p.at("pe").get<std::string>(), p.value("config", kDefaultConfig)};
    }
    m.objective_mw = j.value("objective_mw", 0.0);
    return m;
  });
}

inline json to_json(const Mapping& m) {
  json a = json::object();
  for (const auto& [node, p] : m.assignment) a[node] = {{"pe", p.pe}, {"config", p.config}};
  return {{"assignment", a}, {"objective_mw", m.objective_mw}};
}

// ---------------------------------------------------------------------------
// Knob model

inline accel::KnobSpace knob_space_from_json(const json& j) {
  accel::KnobSpace s = detail::guarded("knob model", [&] {
    accel::KnobSpace k;
    for (const auto& kn : j.at("knobs")) {
      k.knobs.push_back({kn.at("name").get<std::string>(), kn.at("values").get<std::vector<double>>()});
    }
    k.static_mw = j.value("static_mw", 0.0);
    for (const auto& st : j.at("stages")) {
      accel::Stage stage;
      stage.name = st.value("name", "");
      const auto& l = st.at("latency");
      stage.latency.knob = l.at("knob").get<std::string>();
      stage.latency.c0 = l.value("c0", 0.0);
      stage.latency.c1 = l.value("c1", 0.0);
      stage.latency.slope0 = l.value("slope0", 0.0);
      stage.latency.slope1 = l.value("slope1", 0.0);
      stage.latency.pair_knob = l.value("pair_knob", "");
      stage.latency.pair_c = l.value("pair_c", 0.0);
      const auto& p = st.at("power");
      stage.power.knob = p.at("knob").get<std::string>();
      stage.power.p0 = p.value("p0", 0.0);
      stage.power.p1 = p.value("p1", 0.0);
      k.stages.push_back(std::move(stage));
    }
    return k;
  });
  accel::check_knob_space(s);
  return s;
}

// ---------------------------------------------------------------------------
// Environment trace CSV: "time_ms,workload" header, one sample per row.

inline sim::EnvTrace env_trace_from_csv(const std::string& text) {
  sim::EnvTrace t;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (row == 1 && line.find_first_of("0123456789") != 0 && line.rfind("time_ms", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorKind::Parse, "env trace row " + std::to_string(row) + ": expected 'time_ms,workload'");
    }
    try {
      std::size_t a = 0;
      std::size_t b = 0;
      const std::string ts = line.substr(0, comma);
      const std::string ws = line.substr(comma + 1);
      const double tv = std::stod(ts, &a);
      const double wv = std::stod(ws, &b);
      if (a != ts.size() || b != ws.size()) throw std::invalid_argument("trailing characters");
      t.samples.emplace_back(tv, wv);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "env trace row " + std::to_string(row) + ": malformed number");
    }
  }
  t.check();
  return t;
}

inline std::string to_csv(const sim::EnvTrace& t) {
  std::ostringstream os;
  os.precision(12);
  os << "time_ms,workload\n";
  for (const auto& [time, w] : t.samples) os << time << ',' << w << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const TimingReport& r) {
  json nodes = json::object();
  for (const auto& [name, v] : r.node_verdicts) {
    json x = {{"verdict", to_string(v.kind())}, {"failures", v.failures}, {"warnings", v.warnings}};
    if (auto t = r.node_timing.find(name); t != r.node_timing.end()) {
      x["pe"] = t->second.pe;
      x["rate_hz"] = t->second.rate_hz;
      x["period_ms"] = t->second.period_ms;
      x["wcet_ms"] = t->second.wcet_ms;
      x["acet_ms"] = t->second.acet_ms;
      x["response_ms"] = t->second.response_ms;
    }
    nodes[name] = std::move(x);
  }
  json buffers = json::object();
  for (const auto& [id, b] : r.edge_buffers) buffers[id.to_string()] = {{"slots", b.slots}, {"bytes", b.bytes}};
  json freq = json::array();
  for (const auto& f : r.frequency_checks) {
    freq.push_back({{"node", f.node},
                    {"relation", dsl::to_string(f.required.relation)},
                    {"required_hz", f.required.hz},
                    {"declared_hz", f.declared_hz},
                    {"satisfied", f.satisfied}});
  }
  return {{"overall", r.accepted() ? "Accept" : "Reject"},
          {"frequency_constraints", freq},
          {"reject_reasons", r.reject_reasons},
          {"warnings", r.warnings},
          {"nodes", nodes},
          {"pe_utilization", r.pe_utilization},
          {"edge_buffers", buffers},
          {"path_latencies_ms", r.path_latencies}};
}

inline json to_json(const sim::SimMetrics& m) {
  json nodes = json::object();
  for (const auto& [name, n] : m.nodes) {
    nodes[name] = {{"releases", n.releases},
                   {"firings", n.firings},
                   {"completions", n.completions},
                   {"skipped_cold", n.skipped_cold},
                   {"skipped_starved", n.skipped_starved},
                   {"skipped_overrun", n.skipped_overrun},
                   {"skipped_switch", n.skipped_switch},
                   {"deadline_misses", n.deadline_misses},
                   {"achieved_hz", n.achieved_hz}};
  }
  json edges = json::object();
  for (const auto& [id, e] : m.edges) {
    edges[id.to_string()] = {{"capacity", e.capacity == sim::kUnbounded ? json(nullptr) : json(e.capacity)},
                             {"tokens_produced", e.tokens_produced},
                             {"tokens_consumed", e.tokens_consumed},
                             {"tokens_dropped", e.tokens_dropped},
                             {"tokens_resident", e.tokens_resident},
                             {"overflows", e.overflows},
                             {"buffer_high_water", e.buffer_high_water}};
  }
  json sinks = json::object();
  for (const auto& [name, s] : m.sinks) {
    sinks[name] = {{"samples", s.latencies_ms.size()}, {"max_latency_ms", s.max_ms()}};
  }
  return {{"horizon_ms", m.horizon_ms}, {"nodes", nodes}, {"edges", edges}, {"sinks", sinks}};
}

inline json to_json(const sim::DeviationReport& d) {
  json nodes = json::object();
  for (const auto& [name, n] : d.nodes) {
    nodes[name] = {{"declared_hz", n.declared_hz}, {"achieved_hz", n.achieved_hz}, {"abs_diff_hz", n.abs_diff_hz}};
  }
  json edges = json::object();
  for (const auto& [id, e] : d.edges) {
    edges[id.to_string()] = {
        {"allocated_slots", e.allocated_slots}, {"high_water", e.high_water}, {"overflows", e.overflows}};
  }
  json sinks = json::object();
  for (const auto& [name, s] : d.sinks) {
    sinks[name] = {{"static_bound_ms", s.static_bound_ms}, {"observed_max_ms", s.observed_max_ms}};
  }
  return {{"nodes", nodes}, {"edges", edges}, {"sinks", sinks}, {"flags", d.flags}};
}

inline json to_json(const BandwidthProfile& b) {
  json edges = json::object();
  for (const auto& [id, v] : b.per_edge) edges[id.to_string()] = v;
  json stages = json::object();
  for (const auto& [depth, v] : b.per_stage) stages[std::to_string(depth)] = v;
  return {{"per_edge_bytes_per_s", edges},
          {"per_stage_bytes_per_s", stages},
          {"total_input_bytes_per_s", b.total_input},
          {"total_output_bytes_per_s", b.total_output},
          {"funnel", b.is_funnel()}};
}

inline json to_json(const accel::ParetoFrontier& f, const accel::KnobSpace& s) {
  json pts = json::array();
  for (const auto& p : f.points) {
    pts.push_back({{"config", s.config_id(p.config)},
                   {"latency_ms", p.latency_ms},
                   {"power_mw", p.power_mw},
                   {"base_ms", p.model.base_ms},
                   {"slope_ms_per_unit", p.model.slope_ms_per_unit}});
  }
  return {{"deadline_ms", f.deadline_ms}, {"workload_max", f.workload_max}, {"visited", f.visited}, {"points", pts}};
}

}  // namespace tsdf::io
