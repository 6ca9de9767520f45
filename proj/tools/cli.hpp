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

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsdf/tsdf.hpp"

// Command-line driver. Exit codes: 0 success/Accept, 1 usage or IO error,
// 2 analysis rejection or observed violation.

namespace tsdf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitReject = 2;

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph:
    case ErrorKind::MissingSpec:
    case ErrorKind::Infeasible:
    case ErrorKind::EmptyFrontier:
      return kExitReject;
    default:
      return kExitUsage;
  }
}

struct RunConfig {
  std::string program;
  std::string platform;
  std::string perf;
  std::string mapping;
  std::string env;
  std::string knobs;
  std::string out_dir;
  std::string format = "human";
  std::string mode = "wcet";
  double horizon_ms = 10000.0;
  double margin = 0.0;
  double deadline_ms = 0.0;
  double workload_max = 0.0;
  std::string node = "Accel";
  bool exhaustive = false;
  bool histogram = false;
  std::string governor_knobs;
  std::string governor_node;
  double governor_deadline_ms = 0.0;
  double hysteresis = 0.1;
  int confirm = 3;
};

namespace detail {

struct Inputs {
  dsl::Program program;
  dsl::Lowered lowered;
  Platform platform;
  PerfSpec perf;
  PinMap pins;
};

inline dsl::Program load_program(const std::string& path) {
  const std::string text = io::read_file(path);
  try {
    return dsl::parse(text);
  } catch (const dsl::ParseError& e) {
    throw Error(ErrorKind::Parse, e.diagnostic(path));
  }
}

inline dsl::Lowered lower_program(const dsl::Program& prog, const std::string& path) {
  try {
    return dsl::lower(prog);
  } catch (const dsl::ParseError& e) {
    throw Error(ErrorKind::Parse, e.diagnostic(path));
  }
}

inline Inputs load_inputs(const RunConfig& cfg, bool need_platform) {
  Inputs in;
  in.program = load_program(cfg.program);
  in.lowered = lower_program(in.program, cfg.program);
  if (need_platform) {
    if (cfg.platform.empty() || cfg.perf.empty()) {
      throw Error(ErrorKind::Usage, "--platform and --perf are required");
    }
    in.platform = io::platform_from_json(io::parse_json(io::read_file(cfg.platform), cfg.platform));
    in.perf = io::perf_from_json(io::parse_json(io::read_file(cfg.perf), cfg.perf));
    if (!cfg.mapping.empty()) {
      in.pins = io::mapping_from_json(io::parse_json(io::read_file(cfg.mapping), cfg.mapping)).assignment;
    }
  }
  return in;
}

inline void emit(const RunConfig& cfg, const std::string& name, const std::string& content) {
  if (cfg.out_dir.empty()) return;
  io::write_file_atomic(std::filesystem::path(cfg.out_dir) / name, content);
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string human_report(const TimingReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(16) << "node" << std::setw(10) << "pe" << std::right << std::setw(10) << "rate_hz"
     << std::setw(11) << "period_ms" << std::setw(10) << "wcet_ms" << std::setw(10) << "resp_ms" << "  verdict\n";
  for (const auto& [name, v] : r.node_verdicts) {
    os << std::left << std::setw(16) << name;
    if (auto t = r.node_timing.find(name); t != r.node_timing.end()) {
      os << std::setw(10) << t->second.pe << std::right << std::setw(10) << t->second.rate_hz << std::setw(11)
         << t->second.period_ms << std::setw(10) << t->second.wcet_ms << std::setw(10) << t->second.response_ms;
    }
    os << "  " << to_string(v.kind()) << '\n';
    for (const auto& f : v.failures) os << "    fail: " << f << '\n';
    for (const auto& w : v.warnings) os << "    warn: " << w << '\n';
  }
  for (const auto& f : r.frequency_checks) {
    os << "constraint " << f.node << ": frequency " << dsl::to_string(f.required.relation) << ' ' << f.required.hz
       << " Hz, declared " << f.declared_hz << " Hz, " << (f.satisfied ? "satisfied" : "VIOLATED") << '\n';
  }
  if (!r.pe_utilization.empty()) {
    os << "utilization:";
    for (const auto& [pe, u] : r.pe_utilization) os << ' ' << pe << '=' << u;
    os << '\n';
  }
  for (const auto& [id, b] : r.edge_buffers) {
    os << "buffer " << id.to_string() << ": " << b.slots << " slots, " << b.bytes << " bytes\n";
  }
  for (const auto& [sink, ms] : r.path_latencies) os << "reaction bound " << sink << ": " << ms << " ms\n";
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
  for (const auto& reason : r.reject_reasons) os << "reject: " << reason << '\n';
  os << "overall: " << (r.accepted() ? "Accept" : "Reject") << '\n';
  return os.str();
}

// Mapping from pins plus first fit; an infeasible placement becomes a
// rejected report instead of an exception.
struct Planned {
  std::optional<Mapping> mapping;
  std::string failure;
};

inline Planned plan_mapping(const Inputs& in) {
  Planned p;
  try {
    p.mapping = first_fit_map(in.lowered.graph, in.platform, in.perf, in.pins);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Infeasible && e.kind() != ErrorKind::MissingSpec) throw;
    p.failure = e.what();
  }
  return p;
}

inline TimingReport verify_planned(const Inputs& in, const Planned& plan, const RunConfig& cfg) {
  if (plan.mapping) return verify(in.lowered, in.platform, in.perf, *plan.mapping, {cfg.margin});
  const Mapping fallback = cheapest_map(in.lowered.graph, in.platform, in.perf, in.pins);
  TimingReport r = verify(in.lowered, in.platform, in.perf, fallback, {cfg.margin});
  r.reject_reasons.insert(r.reject_reasons.begin(), "mapping: " + plan.failure);
  return r;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg, true);
  const Planned plan = plan_mapping(in);
  const TimingReport report = verify_planned(in, plan, cfg);
  emit(cfg, "report.json", dump(io::to_json(report)));
  if (plan.mapping) emit(cfg, "mapping.json", dump(io::to_json(*plan.mapping)));
  if (cfg.format == "json") {
    out << dump(io::to_json(report));
  } else {
    out << human_report(report);
  }
  return report.accepted() ? kExitOk : kExitReject;
}

inline int cmd_map(const RunConfig& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg, true);
  const Mapping m = cfg.exhaustive ? exhaustive_map(in.lowered.graph, in.platform, in.perf, in.pins)
                                   : first_fit_map(in.lowered.graph, in.platform, in.perf, in.pins);
  emit(cfg, "mapping.json", dump(io::to_json(m)));
  if (cfg.format == "json") {
    out << dump(io::to_json(m));
  } else {
    for (const auto& [node, p] : m.assignment) {
      out << std::left << std::setw(16) << node << p.pe << (p.config.empty() ? "" : " [" + p.config + "]") << '\n';
    }
    out << "total active power: " << m.objective_mw << " mW\n";
  }
  return kExitOk;
}

inline std::string histogram_csv(const sim::SimMetrics& m) {
  std::ostringstream os;
  os << "sink,bin_start_ms,bin_end_ms,count\n";
  for (const auto& [sink, s] : m.sinks) {
    std::map<long long, long long> bins;
    for (double v : s.latencies_ms) ++bins[static_cast<long long>(std::floor(v))];
    for (const auto& [b, c] : bins) os << sink << ',' << b << ',' << b + 1 << ',' << c << '\n';
  }
  return os.str();
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg, true);
  if (cfg.mode != "wcet" && cfg.mode != "model") throw Error(ErrorKind::Usage, "--mode must be wcet or model");
  sim::EnvTrace env;
  if (!cfg.env.empty()) env = io::env_trace_from_csv(io::read_file(cfg.env));
  // An unschedulable program still simulates on its cheapest placement so
  // the violation can be observed.
  const Planned plan = plan_mapping(in);
  const Mapping mapping = plan.mapping ? *plan.mapping : cheapest_map(in.lowered.graph, in.platform, in.perf, in.pins);
  const TimingReport report = verify_planned(in, plan, cfg);

  sim::SimOptions opts;
  opts.horizon_ms = cfg.horizon_ms;
  opts.mode = cfg.mode == "wcet" ? sim::LatencyMode::Wcet : sim::LatencyMode::Model;
  accel::KnobSpace space;
  if (!cfg.governor_knobs.empty()) {
    space = io::knob_space_from_json(io::parse_json(io::read_file(cfg.governor_knobs), cfg.governor_knobs));
    const double wmax = cfg.workload_max > 0 ? cfg.workload_max : 0.0;
    sim::GovernorHook hook;
    hook.node = cfg.governor_node;
    hook.frontier = accel::pruned_pareto(space, cfg.governor_deadline_ms, wmax);
    hook.params = {cfg.governor_deadline_ms, cfg.hysteresis, cfg.confirm};
    opts.governors.push_back(std::move(hook));
  }
  const sim::SimResult res = sim::simulate(in.lowered.graph, in.platform, mapping, in.perf, env, opts);
  const sim::DeviationReport dev = sim::compare_static_dynamic(report, res.metrics);

  std::ostringstream log;
  sim::write_event_log(log, res.events);
  emit(cfg, "metrics.json", dump(io::to_json(res.metrics)));
  emit(cfg, "events.log", log.str());
  emit(cfg, "deviation.json", dump(io::to_json(dev)));
  emit(cfg, "report.json", dump(io::to_json(report)));
  if (cfg.histogram) emit(cfg, "latency_histogram.csv", histogram_csv(res.metrics));

  if (cfg.format == "json") {
    out << dump({{"metrics", io::to_json(res.metrics)}, {"deviation", io::to_json(dev)}});
  } else {
    out << std::fixed << std::setprecision(3);
    out << "simulated " << cfg.horizon_ms << " ms (" << cfg.mode << " latencies), static verdict "
        << (report.accepted() ? "Accept" : "Reject") << '\n';
    out << std::left << std::setw(16) << "node" << std::right << std::setw(10) << "declared" << std::setw(10)
        << "achieved" << std::setw(8) << "misses" << std::setw(8) << "cold" << std::setw(9) << "overrun"
        << std::setw(8) << "rate_x" << '\n';
    for (const auto& [name, nm] : res.metrics.nodes) {
      const auto rates = sim::instantaneous_rates(res.completion_times.at(name));
      double spread = 0.0;
      if (!rates.empty()) {
        const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
        spread = *hi / *lo;
      }
      out << std::left << std::setw(16) << name << std::right << std::setw(10) << in.lowered.graph.node(name).rate_hz
          << std::setw(10) << nm.achieved_hz << std::setw(8) << nm.deadline_misses << std::setw(8)
          << nm.skipped_cold << std::setw(9) << nm.skipped_overrun << std::setw(8) << spread << '\n';
    }
    for (const auto& [sink, s] : res.metrics.sinks) {
      out << "sink " << sink << ": " << s.latencies_ms.size() << " samples, max latency " << s.max_ms() << " ms\n";
    }
    for (const auto& f : dev.flags) out << "violation: " << f << '\n';
  }
  if (opts.mode == sim::LatencyMode::Wcet && !dev.flags.empty()) return kExitReject;
  return kExitOk;
}

inline int cmd_pareto(const RunConfig& cfg, std::ostream& out) {
  const accel::KnobSpace space = io::knob_space_from_json(io::parse_json(io::read_file(cfg.knobs), cfg.knobs));
  const accel::ParetoFrontier f = cfg.exhaustive ? accel::enumerate_pareto(space, cfg.deadline_ms, cfg.workload_max)
                                                 : accel::pruned_pareto(space, cfg.deadline_ms, cfg.workload_max);
  emit(cfg, "frontier.csv", accel::frontier_csv(f, space));
  emit(cfg, "frontier.json", dump(io::to_json(f, space)));
  emit(cfg, "perf_entries.json", dump(io::to_json(accel::frontier_to_perf(f, space, cfg.node))));
  if (cfg.format == "json") {
    out << dump(io::to_json(f, space));
  } else {
    out << f.points.size() << " Pareto-optimal configurations (" << f.visited << " of " << space.size()
        << " evaluated)\n";
    out << accel::frontier_csv(f, space);
  }
  return kExitOk;
}

inline int cmd_bandwidth(const RunConfig& cfg, std::ostream& out) {
  const dsl::Lowered low = lower_program(load_program(cfg.program), cfg.program);
  const auto report = validate_graph(low.graph);
  if (!report.ok()) throw Error(ErrorKind::InvalidGraph, "graph is invalid: " + report.violations.front().message);
  const BandwidthProfile b = bandwidth_profile(low.graph);
  emit(cfg, "bandwidth.json", dump(io::to_json(b)));
  if (cfg.format == "json") {
    out << dump(io::to_json(b));
  } else {
    out << std::fixed << std::setprecision(3);
    for (const auto& [depth, v] : b.per_stage) out << "stage " << depth << ": " << v / 1e6 << " MB/s\n";
    out << "sensing input: " << b.total_input / 1e6 << " MB/s\n";
    out << "actuation output: " << b.total_output / 1e3 << " KB/s\n";
    out << "funnel: " << (b.is_funnel() ? "yes" : "no") << '\n';
  }
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"tsdf: timing-safe macro-dataflow toolchain"};
  app.name("tsdf");
  RunConfig cfg;

  auto common = [&](CLI::App* sub, bool program, bool platform) {
    if (program) sub->add_option("program", cfg.program, ".mdfg program")->required();
    if (platform) {
      sub->add_option("--platform", cfg.platform, "platform JSON");
      sub->add_option("--perf", cfg.perf, "performance specification JSON");
      sub->add_option("--mapping", cfg.mapping, "mapping pin file (JSON)");
    }
    sub->add_option("--out", cfg.out_dir, "output directory for artifacts");
    sub->add_option("--format", cfg.format, "human or json")->check(CLI::IsMember({"human", "json"}));
  };

  auto* check = app.add_subcommand("check", "parse, validate and verify timing");
  common(check, true, true);
  check->add_option("--margin", cfg.margin, "utilization held back per PE")->check(CLI::Range(0.0, 0.99));

  auto* map = app.add_subcommand("map", "assign nodes to processing elements");
  common(map, true, true);
  map->add_flag("--exhaustive", cfg.exhaustive, "optimal search instead of first fit");

  auto* simulate = app.add_subcommand("simulate", "discrete-event simulation");
  common(simulate, true, true);
  simulate->add_option("--env", cfg.env, "environment trace CSV (time_ms,workload)");
  simulate->add_option("--horizon-ms", cfg.horizon_ms, "simulated time")->check(CLI::NonNegativeNumber);
  simulate->add_option("--mode", cfg.mode, "wcet or model")->check(CLI::IsMember({"wcet", "model"}));
  simulate->add_option("--margin", cfg.margin, "utilization held back per PE")->check(CLI::Range(0.0, 0.99));
  simulate->add_flag("--histogram", cfg.histogram, "write per-sink latency histogram CSV");
  simulate->add_option("--governor-knobs", cfg.governor_knobs, "knob model driving a governed node");
  simulate->add_option("--governor-node", cfg.governor_node, "node whose configuration the governor picks");
  simulate->add_option("--governor-deadline", cfg.governor_deadline_ms, "governed node deadline (ms)");
  simulate->add_option("--workload-max", cfg.workload_max, "workload bound for the governed node");
  simulate->add_option("--hysteresis", cfg.hysteresis, "governor workload inflation");
  simulate->add_option("--confirm", cfg.confirm, "observations before a non-urgent switch");

  auto* pareto = app.add_subcommand("pareto", "latency/power Pareto frontier of a knob model");
  pareto->add_option("knobs", cfg.knobs, "knob model JSON")->required();
  pareto->add_option("--deadline", cfg.deadline_ms, "latency deadline (ms)")->required();
  pareto->add_option("--workload-max", cfg.workload_max, "workload the deadline must hold at");
  pareto->add_option("--node", cfg.node, "node name for emitted performance entries");
  pareto->add_flag("--exhaustive", cfg.exhaustive, "enumerate every configuration");
  pareto->add_option("--out", cfg.out_dir, "output directory for artifacts");
  pareto->add_option("--format", cfg.format, "human or json")->check(CLI::IsMember({"human", "json"}));

  auto* bandwidth = app.add_subcommand("bandwidth", "static communication volume per edge and stage");
  common(bandwidth, true, false);

  app.require_subcommand(1);

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*check) return detail::cmd_check(cfg, out);
    if (*map) return detail::cmd_map(cfg, out);
    if (*simulate) return detail::cmd_simulate(cfg, out);
    if (*pareto) return detail::cmd_pareto(cfg, out);
    if (*bandwidth) return detail::cmd_bandwidth(cfg, out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error[io]: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tsdf::cli
