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


// Embedding the library directly: parse a program, place it, verify it, then
// replay the placement in the simulator and compare.
//
//   tsdf_embed programs/vacuum.mdfg programs/vacuum_platform.json programs/vacuum_perf.json

#include <iostream>

#include <tsdf/tsdf.hpp>

int main(int argc, char** argv) {
  using namespace tsdf;
  if (argc != 4) {
    std::cerr << "usage: tsdf_embed PROGRAM PLATFORM PERF\n";
    return 1;
  }
  try {
    const auto program = dsl::lower(dsl::parse(io::read_file(argv[1])));
    const auto platform = io::platform_from_json(io::parse_json(io::read_file(argv[2]), argv[2]));
    const auto perf = io::perf_from_json(io::parse_json(io::read_file(argv[3]), argv[3]));

    const auto mapping = cheapest_map(program.graph, platform, perf);
    const auto report = verify(program, platform, perf, mapping);
    std::cout << (report.accepted() ? "Accept" : "Reject") << '\n';
    for (const auto& r : report.reject_reasons) std::cout << "  " << r << '\n';
    for (const auto& [node, pe] : mapping.assignment) std::cout << "  " << node << " -> " << pe.pe << '\n';

    sim::SimOptions opts;
    opts.horizon_ms = 10000;
    opts.record_events = false;
    const auto run = sim::simulate(program.graph, platform, mapping, perf, {}, opts);
    for (const auto& [sink, s] : run.metrics.sinks) {
      std::cout << sink << ": worst " << s.max_ms() << " ms, bound " << report.path_latencies.at(sink) << " ms\n";
    }
    return report.accepted() ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
