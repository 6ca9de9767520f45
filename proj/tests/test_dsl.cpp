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

#include <algorithm>
#include <chrono>
#include <random>

#include "support.hpp"

using namespace tsdf;
using dsl::ParseError;

namespace {

dsl::Program vacuum() { return dsl::parse(fixtures::program_text("vacuum.mdfg")); }

// Message and position of the error raised by parsing (and lowering) text.
struct Failure {
  std::string message;
  dsl::SourcePos pos;
};

std::optional<Failure> failure_of(const std::string& text) {
  try {
    dsl::lower(dsl::parse(text));
  } catch (const ParseError& e) {
    return Failure{e.what(), e.pos()};
  }
  return std::nullopt;
}

std::string with_line_removed(const std::string& text, const std::string& needle) {
  std::istringstream in(text);
  std::string out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(needle) == std::string::npos) out += line + "\n";
  }
  return out;
}

// Random well-formed program: every sensor is consumed, every compute node
// applied exactly once, and each application after the first consumes a
// previous binding, so the lowered graph is connected.
dsl::Program random_program(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  static const char* kUnits[] = {"Hz", "FPS", ""};
  dsl::Program p;
  const int sensors = pick(1, 4);
  const int computes = pick(1, 5);
  std::vector<std::string> sensor_names;
  std::vector<std::string> compute_names;
  for (int i = 0; i < sensors + computes; ++i) {
    dsl::RequireDecl r;
    const bool is_sensor = i < sensors;
    r.name = (coin(0.2) ? std::to_string(pick(1, 9)) : std::string()) + (is_sensor ? "Sense" : "Task") +
             std::to_string(i);
    r.kind = is_sensor ? NodeKind::Sensor : NodeKind::Compute;
    if (is_sensor || coin(0.6)) {
      r.constraints.push_back({"frequency", coin(0.8) ? dsl::Relation::AtLeast : dsl::Relation::Equal,
                               std::to_string(pick(1, 200)), kUnits[pick(0, 2)], {}});
    }
    if (is_sensor && coin(0.4)) {
      r.constraints.push_back({"resolution", dsl::Relation::Equal,
                               std::to_string(pick(1, 64) * 10) + "x" + std::to_string(pick(1, 48) * 10), "", {}});
    } else {
      r.constraints.push_back({"token_bytes", dsl::Relation::Equal, std::to_string(pick(1, 999)),
                               coin(0.5) ? "B" : "KB", {}});
    }
    if (coin(0.2)) r.constraints.push_back({"note_level", dsl::Relation::AtMost, std::to_string(pick(0, 9)), "", {}});
    std::shuffle(r.constraints.begin(), r.constraints.end(), rng);
    (is_sensor ? sensor_names : compute_names).push_back(r.name);
    p.requires_.push_back(std::move(r));
  }
  std::vector<std::string> values = sensor_names;
  std::vector<std::string> unused = sensor_names;
  std::string previous;
  for (int i = 0; i < computes; ++i) {
    dsl::BindingDecl b;
    b.name = "v" + std::to_string(i);
    b.function = compute_names[i];
    if (!previous.empty()) b.args.push_back(previous);
    if (!unused.empty()) {
      b.args.push_back(unused.back());
      unused.pop_back();
    }
    if (b.args.empty() || coin(0.3)) {
      const auto& extra = values[pick(0, static_cast<int>(values.size()) - 1)];
      if (std::find(b.args.begin(), b.args.end(), extra) == b.args.end()) b.args.push_back(extra);
    }
    if (i == computes - 1) {
      for (const auto& s : unused) b.args.push_back(s);
    }
    for (std::size_t k = 0; k < b.args.size(); ++k) {
      const int r = pick(0, 5);
      b.policies.push_back(r == 4 ? Policy::window(pick(2, 5)) : r == 5 ? Policy::fifo() : Policy::latest());
    }
    values.push_back(b.name);
    previous = b.name;
    p.bindings.push_back(std::move(b));
  }
  p.outputs = {previous};
  return p;
}

}  // namespace

TEST(Dsl, RobotVacuumProgram) {
  const auto start = std::chrono::steady_clock::now();
  const auto p = vacuum();
  ASSERT_EQ(p.requires_.size(), 7u);
  const std::map<std::string, double> expected{{"IR", 50},           {"Camera", 30},       {"IMU", 100},
                                               {"WO", 50},           {"2DPerception", 50}, {"Localization", 50},
                                               {"Control", 50}};
  const auto low = dsl::lower(p);
  for (const auto& [name, hz] : expected) {
    const auto f = low.constraints.frequency(name);
    ASSERT_TRUE(f) << name;
    EXPECT_EQ(f->relation, dsl::Relation::AtLeast);
    EXPECT_DOUBLE_EQ(f->hz, hz) << name;
  }
  EXPECT_EQ(low.graph.node("Camera").attrs.at("resolution"), "320x240");
  EXPECT_EQ(low.graph.node("Camera").token_bytes, 320 * 240 * 3);
  ASSERT_EQ(p.bindings.size(), 3u);
  EXPECT_EQ(p.bindings[0].name, "perc");
  EXPECT_EQ(p.bindings[1].name, "loc");
  EXPECT_EQ(p.bindings[2].name, "cmd");
  EXPECT_EQ(p.outputs, std::vector<std::string>{"cmd"});
  EXPECT_EQ(dsl::parse(dsl::pretty_print(p)), p);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
}

TEST(Dsl, LowerRobotVacuum) {
  const auto low = dsl::lower(vacuum());
  EXPECT_EQ(low.graph.nodes.size(), 7u);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& e : low.graph.edges) edges.insert({e.producer, e.consumer});
  const std::set<std::pair<std::string, std::string>> expected{
      {"IR", "2DPerception"},  {"Camera", "2DPerception"},  {"Camera", "Localization"}, {"IMU", "Localization"},
      {"WO", "Localization"}, {"2DPerception", "Control"}, {"Localization", "Control"}};
  EXPECT_EQ(edges, expected);
  EXPECT_EQ(low.graph.edges.size(), 7u);
  EXPECT_EQ(low.graph.outputs, std::vector<std::string>{"Control"});
  EXPECT_TRUE(validate_graph(low.graph).empty());
  // Same shape as the hand-built graph, apart from the recorded attributes.
  Mdfg g = low.graph;
  for (auto& [_, n] : g.nodes) n.attrs.clear();
  EXPECT_EQ(g.nodes, fixtures::robot_vacuum_graph().nodes);
}

TEST(Dsl, GoldenPrettyPrint) {
  const std::string golden = io::read_file(fixtures::source_dir() / "tests" / "golden" / "vacuum.pretty.mdfg");
  EXPECT_EQ(dsl::pretty_print(vacuum()), golden);
}

TEST(Dsl, EmptyInput) {
  for (const char* text : {"", "   \n# only a comment\n"}) {
    try {
      dsl::parse(text);
      FAIL() << "accepted empty program";
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("expected 'require'"), std::string::npos);
    }
  }
  try {
    dsl::parse("");
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 1);
  }
}

TEST(Dsl, ForwardReferenceNamesTheMissingInput) {
  const std::string text =
      "require Radar sensor { frequency >= 20 Hz, token_bytes = 2 KB }\n"
      "require Fusion compute { frequency >= 10 Hz, token_bytes = 10 KB }\n"
      "objs = Fusion(Radar, Lidar)\n"
      "output objs\n";
  const auto f = failure_of(text);
  ASSERT_TRUE(f);
  EXPECT_NE(f->message.find("'Lidar'"), std::string::npos) << f->message;
  EXPECT_EQ(f->pos.line, 3);
  EXPECT_EQ(f->pos.column, 22);

  // Dropping a require from the robot program.
  const auto edited = with_line_removed(fixtures::program_text("vacuum.mdfg"), "require IMU");
  const auto g = failure_of(edited);
  ASSERT_TRUE(g);
  EXPECT_NE(g->message.find("'IMU'"), std::string::npos) << g->message;
  const auto use = edited.find("loc = Localization");
  EXPECT_EQ(g->pos.line, 1 + std::count(edited.begin(), edited.begin() + use, '\n'));
}

TEST(Dsl, DiagnosticFormat) {
  try {
    dsl::parse("require A sensor { frequency >= 0 Hz }\n");
    FAIL();
  } catch (const ParseError& e) {
    const auto d = e.diagnostic("robot.mdfg");
    EXPECT_EQ(d.rfind("robot.mdfg:1:", 0), 0u) << d;
    EXPECT_NE(d.find(": error: "), std::string::npos) << d;
  }
}

TEST(Dsl, Rejections) {
  const std::string head = "require S sensor { frequency >= 10 Hz, token_bytes = 4 B }\n";
  const std::vector<std::pair<std::string, std::string>> cases{
      {head + head, "duplicate"},
      {"require S widget { }\n", "kind"},
      {"require S sensor { frequency >= 10 Hz, frequency >= 20 Hz, token_bytes = 4 B }\n", "frequency"},
      {"require S sensor { frequency >= -5 Hz, token_bytes = 4 B }\n", ""},
      {"require S sensor { frequency >= 10 parsecs, token_bytes = 4 B }\n", "unit"},
      {"require S sensor { frequency >= 10 Hz, token_bytes >= 4 B }\n", "token_bytes"},
      {"require S sensor { frequency >= 10 Hz, resolution = wide }\n", "resolution"},
      {head + "x = S(S)\n", "sensor"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S) @ latest, fifo\n", "polic"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S) @ window(0)\n", "window"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S)\nx = T(S)\n", "duplicate"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S)\noutput y\n", "'y'"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S) $\n", ""},
      {"require Caméra sensor { frequency >= 10 Hz, token_bytes = 4 B }\n", ""},
      {"require S sensor { token_bytes = 4 B }\n", "frequency"},
      {"require S sensor { frequency >= 10 Hz }\n", "token_bytes"},
      {head + "require T compute { token_bytes = 4 B }\nx = T(S)\ny = T(S, x)\n", "arity"},
      {head + "require R sensor { frequency >= 5 Hz, token_bytes = 4 B }\n"
              "require T compute { token_bytes = 4 B }\nx = T(S)\ny = T(R)\n",
       "different inputs"},
  };
  for (const auto& [text, needle] : cases) {
    const auto f = failure_of(text);
    ASSERT_TRUE(f) << text;
    EXPECT_NE(f->message.find(needle), std::string::npos) << text << " -> " << f->message;
    EXPECT_GE(f->pos.line, 1);
    EXPECT_GE(f->pos.column, 1);
  }
}

TEST(Dsl, CommentsUnitsAndAliases) {
  const std::string text =
      "# comment with ünïcode is fine\n"
      "require Cam sensor { frequency = 30 FPS, resolution = 10x10, channels = 1 }  # trailing\n"
      "require Fil compute { token_bytes = 2 KB }\n"
      "require Out actuator { }\n"
      "a = Fil(Cam) @ window(1)\n"
      "b = Fil(Cam)\n"
      "c = Out(b)\n"
      "output c, a\n";
  const auto p = dsl::parse(text);
  EXPECT_EQ(p.bindings[0].policies[0], Policy::latest());
  const auto low = dsl::lower(p);
  EXPECT_EQ(low.graph.node("Cam").token_bytes, 100);
  EXPECT_EQ(low.graph.node("Fil").token_bytes, 2000);
  EXPECT_DOUBLE_EQ(low.graph.node("Fil").rate_hz, 30.0);  // inherited
  EXPECT_DOUBLE_EQ(low.graph.node("Out").rate_hz, 30.0);
  EXPECT_EQ(low.graph.edges.size(), 2u);
  EXPECT_EQ(low.graph.outputs, (std::vector<std::string>{"Out", "Fil"}));
  EXPECT_TRUE(validate_graph(low.graph).empty());
}

TEST(Dsl, OneSensorOneCompute) {
  const auto low = dsl::lower(dsl::parse(
      "require S sensor { frequency >= 10 Hz, token_bytes = 8 B }\n"
      "require Id compute { token_bytes = 8 B }\n"
      "y = Id(S)\n"));
  EXPECT_EQ(low.graph.nodes.size(), 2u);
  EXPECT_EQ(low.graph.edges.size(), 1u);
}

TEST(Dsl, PrettyPrintRejectsEmptyProgram) { EXPECT_THROW(dsl::pretty_print(dsl::Program{}), Error); }

TEST(Dsl, RoundTripAndLoweringProperties) {
  std::mt19937 rng(20261015);
  for (int i = 0; i < 300; ++i) {
    const auto p = random_program(rng);
    const std::string text = dsl::pretty_print(p);
    const auto q = dsl::parse(text);
    ASSERT_EQ(q, p) << text;
    EXPECT_EQ(dsl::pretty_print(q), text);
    const auto low = dsl::lower(q);
    EXPECT_TRUE(validate_graph(low.graph).empty()) << text;
    std::size_t constraints = 0;
    for (const auto& r : p.requires_) constraints += r.constraints.size();
    EXPECT_EQ(low.constraints.size(), constraints);
    EXPECT_EQ(low.graph.nodes.size(), p.requires_.size());
  }
}

TEST(Dsl, ShuffledBindingsNeverLowerToACycle) {
  std::mt19937 rng(7);
  int rejected = 0;
  for (int i = 0; i < 300; ++i) {
    auto p = random_program(rng);
    std::shuffle(p.bindings.begin(), p.bindings.end(), rng);
    try {
      const auto low = dsl::lower(dsl::parse(dsl::pretty_print(p)));
      EXPECT_TRUE(validate_graph(low.graph).of(ViolationCategory::Cycle).empty());
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
}
