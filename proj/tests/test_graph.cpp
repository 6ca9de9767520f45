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

#include <gtest/gtest.h>

#include "support.hpp"

using namespace tsdf;
using tsdf::fixtures::add_node;
using tsdf::fixtures::make_node;

namespace {

// Independent cycle oracle: a graph is cyclic iff repeatedly deleting
// nodes without remaining predecessors leaves something behind.
bool has_cycle_by_peeling(const Mdfg& g) {
  std::map<std::string, int> indeg;
  for (const auto& [n, _] : g.nodes) indeg[n] = 0;
  for (const auto& e : g.edges) ++indeg[e.consumer];
  std::vector<std::string> ready;
  for (const auto& [n, d] : indeg) {
    if (d == 0) ready.push_back(n);
  }
  std::size_t removed = 0;
  while (!ready.empty()) {
    const auto n = ready.back();
    ready.pop_back();
    ++removed;
    for (const auto& e : g.edges) {
      if (e.producer == n && --indeg[e.consumer] == 0) ready.push_back(e.consumer);
    }
  }
  return removed != g.nodes.size();
}

}  // namespace

TEST(Graph, RobotVacuumIsValid) {
  EXPECT_TRUE(validate_graph(fixtures::robot_vacuum_graph()).empty());
}

TEST(Graph, SingleSensorIsValid) {
  Mdfg g;
  add_node(g, make_node("Lidar", NodeKind::Sensor, 10, 1000));
  g.outputs = {"Lidar"};
  EXPECT_TRUE(validate_graph(g).empty());
  EXPECT_EQ(topo_order(g), std::vector<std::string>{"Lidar"});
}

TEST(Graph, FeedbackEdgeIsOneCycle) {
  Mdfg g = fixtures::robot_vacuum_graph();
  g.nodes.at("Localization").ports.push_back("in3");
  g.edges.push_back({"Control", "Localization", "in3"});
  ASSERT_TRUE(has_cycle_by_peeling(g));
  const auto report = validate_graph(g);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].category, ViolationCategory::Cycle);
  EXPECT_EQ(report.violations[0].subject, "Localization->Control->Localization");
  EXPECT_THROW(topo_order(g), Error);
}

TEST(Graph, SelfLoopIsCycle) {
  Mdfg g;
  add_node(g, make_node("S", NodeKind::Sensor, 10, 4));
  add_node(g, make_node("A", NodeKind::Compute, 10, 4, {"in0", "in1"}));
  g.edges = {{"S", "A", "in0"}, {"A", "A", "in1"}};
  const auto cyc = validate_graph(g).of(ViolationCategory::Cycle);
  ASSERT_EQ(cyc.size(), 1u);
  EXPECT_EQ(cyc[0].subject, "A->A");
}

TEST(Graph, StructuralViolations) {
  Mdfg g;
  add_node(g, make_node("S", NodeKind::Sensor, 10, 4, {"bogus"}));
  add_node(g, make_node("T", NodeKind::Sensor, 0, 4));
  add_node(g, make_node("A", NodeKind::Compute, 10, 4, {"in0", "in1"}));
  add_node(g, make_node("B", NodeKind::Compute, 10, 4, {"in0"}));
  g.edges = {{"S", "A", "in0"}, {"T", "A", "in0"}, {"A", "S", "x"}};
  const auto r = validate_graph(g);
  EXPECT_FALSE(r.of(ViolationCategory::SensorWithInput).empty());
  EXPECT_FALSE(r.of(ViolationCategory::DuplicateEdge).empty());
  EXPECT_FALSE(r.of(ViolationCategory::BadRate).empty());
  EXPECT_FALSE(r.of(ViolationCategory::DanglingPort).empty());  // A.in1 and B.in0 unconnected
  EXPECT_FALSE(r.ok());
}

TEST(Graph, DisconnectedIsOnlyAWarning) {
  Mdfg g;
  add_node(g, make_node("S", NodeKind::Sensor, 10, 4));
  add_node(g, make_node("T", NodeKind::Sensor, 10, 4));
  const auto r = validate_graph(g);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].category, ViolationCategory::Disconnected);
  EXPECT_EQ(r.violations[0].severity, Severity::Warning);
  EXPECT_TRUE(r.ok());
  EXPECT_FALSE(r.empty());
}

TEST(Graph, UnknownEndpointsAndOutputs) {
  Mdfg g;
  add_node(g, make_node("S", NodeKind::Sensor, 10, 4));
  g.edges = {{"S", "Ghost", "in0"}};
  g.outputs = {"Nobody"};
  const auto r = validate_graph(g);
  EXPECT_EQ(r.of(ViolationCategory::UnknownNode).size(), 2u);
}

TEST(Graph, IdentifierRules) {
  EXPECT_TRUE(is_identifier("Camera"));
  EXPECT_TRUE(is_identifier("2DPerception"));
  EXPECT_TRUE(is_identifier("loc_2"));
  EXPECT_FALSE(is_identifier(""));
  EXPECT_FALSE(is_identifier("_hidden"));
  EXPECT_FALSE(is_identifier("123"));
  EXPECT_FALSE(is_identifier("a-b"));
}

TEST(Graph, WindowOfOneIsLatest) {
  EXPECT_EQ(Policy::window(1), Policy::latest());
  EXPECT_TRUE(Policy::window(3).is_window());
  EXPECT_EQ(Policy::window(3).window_size(), 3);
  EXPECT_THROW(Policy::window(0), Error);
}

TEST(Graph, TopoOrderRobotVacuum) {
  const std::vector<std::string> expected{"Camera", "IMU", "IR", "WO", "2DPerception", "Localization", "Control"};
  EXPECT_EQ(topo_order(fixtures::robot_vacuum_graph()), expected);
}

TEST(Graph, TopoOrderChain) {
  Mdfg g;
  add_node(g, make_node("C", NodeKind::Compute, 10, 4, {"in0"}));
  add_node(g, make_node("A", NodeKind::Sensor, 10, 4));
  add_node(g, make_node("B", NodeKind::Compute, 10, 4, {"in0"}));
  g.edges = {{"B", "C", "in0"}, {"A", "B", "in0"}};
  EXPECT_EQ(topo_order(g), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Graph, TopoOrderIsPermutationRespectingEdges) {
  for (const auto& c : fixtures::corpus(120, 500)) {
    const Mdfg& g = c.graph;
    ASSERT_TRUE(validate_graph(g).empty()) << "seed " << c.seed;
    const auto order = topo_order(g);
    ASSERT_EQ(order.size(), g.nodes.size());
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    ASSERT_EQ(pos.size(), g.nodes.size());
    for (const auto& e : g.edges) EXPECT_LT(pos.at(e.producer), pos.at(e.consumer)) << "seed " << c.seed;
    EXPECT_EQ(validate_graph(g), validate_graph(g));
  }
}

TEST(Graph, BandwidthArithmetic) {
  Mdfg g;
  add_node(g, make_node("Camera", NodeKind::Sensor, 30, 320 * 240 * 3));
  add_node(g, make_node("Hd", NodeKind::Sensor, 30, 3110400));
  add_node(g, make_node("Loc", NodeKind::Compute, 30, 200, {"in0", "in1"}));
  add_node(g, make_node("Ctl", NodeKind::Compute, 50, 100, {"in0"}));
  add_node(g, make_node("Vehicle", NodeKind::Actuator, 50, 0, {"in0"}));
  g.edges = {{"Camera", "Loc", "in0"}, {"Hd", "Loc", "in1"}, {"Loc", "Ctl", "in0"}, {"Ctl", "Vehicle", "in0"}};
  const auto b = bandwidth_profile(g);
  EXPECT_DOUBLE_EQ(b.per_edge.at({"Camera", "Loc", "in0"}), 6912000.0);
  EXPECT_DOUBLE_EQ(b.per_edge.at({"Hd", "Loc", "in1"}), 93312000.0);
  EXPECT_DOUBLE_EQ(b.per_edge.at({"Ctl", "Vehicle", "in0"}), 5000.0);
  EXPECT_DOUBLE_EQ(b.total_input, 6912000.0 + 93312000.0);
  EXPECT_DOUBLE_EQ(b.total_output, 5000.0);
  EXPECT_DOUBLE_EQ(b.per_stage.at(0), 6912000.0 + 93312000.0);
  EXPECT_DOUBLE_EQ(b.per_stage.at(1), 6000.0);
  EXPECT_DOUBLE_EQ(b.per_stage.at(2), 5000.0);
  EXPECT_TRUE(b.is_funnel());
}

TEST(Graph, BothExampleGraphsFunnel) {
  for (const char* name : {"vacuum.mdfg", "av.mdfg"}) {
    const auto low = fixtures::load_lowered(name);
    const auto b = bandwidth_profile(low.graph);
    EXPECT_TRUE(b.is_funnel()) << name;
    EXPECT_GE(b.total_input, b.total_output) << name;
  }
}
