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

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <string_view>
#include <utility>
#include <vector>

#include "tsdf/error.hpp"
#include "tsdf/graph.hpp"

// Textual program format:
//
//   require <Name> <sensor|compute|actuator> { <key> <op> <value> [unit], ... }
//   <name> = <Function>(<arg>, ...) [@ <policy>, ...]
//   output <name>, ...
//
// One statement per line, '#' starts a comment. Policies are given per
// argument position: latest (default), window(k), fifo.

namespace tsdf::dsl {

struct SourcePos {
  int line = 1;
  int column = 1;
};

class ParseError : public Error {
 public:
  ParseError(SourcePos pos, const std::string& message)
      : Error(ErrorKind::Parse, message), pos_(pos) {}

  SourcePos pos() const noexcept { return pos_; }

  // "file:line:col: error: message"
  std::string diagnostic(const std::string& file) const {
    std::ostringstream os;
    os << file << ':' << pos_.line << ':' << pos_.column << ": error: " << what();
    return os.str();
  }

 private:
  SourcePos pos_;
};

enum class Relation { AtLeast, Equal, AtMost };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::AtLeast: return ">=";
    case Relation::Equal: return "=";
    case Relation::AtMost: return "<=";
  }
  return "?";
}

struct Constraint {
  std::string key;
  Relation relation = Relation::Equal;
  std::string value;
  std::string unit;  // empty when absent
  SourcePos pos;

  bool operator==(const Constraint& o) const {
    return key == o.key && relation == o.relation && value == o.value && unit == o.unit;
  }
};

struct RequireDecl {
  std::string name;
  NodeKind kind = NodeKind::Sensor;
  std::vector<Constraint> constraints;
  SourcePos pos;

  bool operator==(const RequireDecl& o) const {
    return name == o.name && kind == o.kind && constraints == o.constraints;
  }
};

struct BindingDecl {
  std::string name;
  std::string function;
  std::vector<std::string> args;
  std::vector<Policy> policies;  // one per arg
  SourcePos pos;

  bool operator==(const BindingDecl& o) const {
    return name == o.name && function == o.function && args == o.args && policies == o.policies;
  }
};

struct Program {
  std::vector<RequireDecl> requires_;
  std::vector<BindingDecl> bindings;
  std::vector<std::string> outputs;
  SourcePos outputs_pos;

  const RequireDecl* find_require(const std::string& name) const {
    for (const auto& r : requires_) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
  const BindingDecl* find_binding(const std::string& name) const {
    for (const auto& b : bindings) {
      if (b.name == name) return &b;
    }
    return nullptr;
  }

  bool operator==(const Program& o) const {
    return requires_ == o.requires_ && bindings == o.bindings && outputs == o.outputs;
  }
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

enum class Tok { Word, LBrace, RBrace, LParen, RParen, Comma, Assign, At, Ge, Le, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

inline const char* describe(Tok t) {
  switch (t) {
    case Tok::Word: return "word";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Assign: return "'='";
    case Tok::At: return "'@'";
    case Tok::Ge: return "'>='";
    case Tok::Le: return "'<='";
    case Tok::Newline: return "end of line";
    case Tok::End: return "end of input";
  }
  return "?";
}

inline std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  SourcePos pos;
  std::size_t i = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
    ++i;
  };
  while (i < text.size()) {
    const char c = text[i];
    const SourcePos start = pos;
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
      continue;
    }
    if (c == '\n') {
      out.push_back({Tok::Newline, "\n", start});
      advance();
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      advance();
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      std::string word;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_' || text[i] == '.')) {
        word.push_back(text[i]);
        advance();
      }
      out.push_back({Tok::Word, std::move(word), start});
      continue;
    }
    auto single = [&](Tok t) {
      out.push_back({t, std::string(1, c), start});
      advance();
    };
    switch (c) {
      case '{': single(Tok::LBrace); continue;
      case '}': single(Tok::RBrace); continue;
      case '(': single(Tok::LParen); continue;
      case ')': single(Tok::RParen); continue;
      case ',': single(Tok::Comma); continue;
      case '@': single(Tok::At); continue;
      case '=': single(Tok::Assign); continue;
      default: break;
    }
    if ((c == '>' || c == '<') && i + 1 < text.size() && text[i + 1] == '=') {
      out.push_back({c == '>' ? Tok::Ge : Tok::Le, c == '>' ? ">=" : "<=", start});
      advance();
      advance();
      continue;
    }
    if (static_cast<unsigned char>(c) >= 0x80) {
      throw ParseError(start, "non-ASCII character outside a comment");
    }
    throw ParseError(start, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", pos});
  return out;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string lower_ascii(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// "320x240" / "320X240" -> {320, 240}
inline std::optional<std::pair<std::int64_t, std::int64_t>> parse_resolution(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos || x == 0 || x + 1 == s.size()) return std::nullopt;
  std::int64_t w = 0;
  std::int64_t h = 0;
  auto r1 = std::from_chars(s.data(), s.data() + x, w);
  auto r2 = std::from_chars(s.data() + x + 1, s.data() + s.size(), h);
  if (r1.ec != std::errc() || r1.ptr != s.data() + x) return std::nullopt;
  if (r2.ec != std::errc() || r2.ptr != s.data() + s.size()) return std::nullopt;
  if (w <= 0 || h <= 0) return std::nullopt;
  return std::make_pair(w, h);
}

// Frequency units are interchangeable; both normalize to Hz.
inline bool is_frequency_unit(const std::string& unit) {
  const auto u = lower_ascii(unit);
  return u.empty() || u == "hz" || u == "fps";
}

inline std::optional<double> byte_multiplier(const std::string& unit) {
  const auto u = lower_ascii(unit);
  if (u.empty() || u == "b") return 1.0;
  if (u == "kb") return 1e3;
  if (u == "mb") return 1e6;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program run() {
    Program prog;
    bool saw_output = false;
    skip_newlines();
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (t.kind == Tok::Word && t.text == "require") {
        parse_require(prog);
      } else if (t.kind == Tok::Word && t.text == "output") {
        if (prog.requires_.empty()) throw ParseError(t.pos, "expected 'require'");
        if (saw_output) throw ParseError(t.pos, "duplicate 'output' statement");
        parse_output(prog);
        saw_output = true;
      } else if (t.kind == Tok::Word) {
        if (prog.requires_.empty()) throw ParseError(t.pos, "expected 'require'");
        parse_binding(prog);
      } else {
        throw ParseError(t.pos, std::string("expected 'require', a binding or 'output', found ") +
                                    describe(t.kind));
      }
      skip_newlines();
    }
    if (prog.requires_.empty()) throw ParseError(peek().pos, "expected 'require'");
    return prog;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  const Token& expect(Tok kind, const char* what) {
    const Token& t = peek();
    if (t.kind != kind) {
      throw ParseError(t.pos, std::string("expected ") + what + ", found " +
                                  (t.kind == Tok::Word ? "'" + t.text + "'" : describe(t.kind)));
    }
    return take();
  }

  const Token& expect_name(const char* what) {
    const Token& t = expect(Tok::Word, what);
    if (!is_identifier(t.text)) throw ParseError(t.pos, "'" + t.text + "' is not a valid identifier");
    return t;
  }

  void end_statement() {
    const Token& t = peek();
    if (t.kind != Tok::Newline && t.kind != Tok::End) {
      throw ParseError(t.pos, std::string("expected end of line, found ") +
                                  (t.kind == Tok::Word ? "'" + t.text + "'" : describe(t.kind)));
    }
    if (t.kind == Tok::Newline) take();
  }

  void skip_newlines() {
    while (peek().kind == Tok::Newline) take();
  }

  void declare(const Token& name) {
    if (!names_.insert(name.text).second) {
      throw ParseError(name.pos, "duplicate name '" + name.text + "'");
    }
  }

  void parse_require(Program& prog) {
    RequireDecl decl;
    decl.pos = take().pos;
    const Token& name = expect_name("node name after 'require'");
    decl.name = name.text;
    const Token& kind = expect(Tok::Word, "node kind (sensor, compute or actuator)");
    auto k = parse_node_kind(kind.text);
    if (!k) throw ParseError(kind.pos, "unknown node kind '" + kind.text + "'");
    decl.kind = *k;
    expect(Tok::LBrace, "'{'");
    bool have_frequency = false;
    if (peek().kind != Tok::RBrace) {
      for (;;) {
        Constraint c;
        const Token& key = expect_name("constraint key");
        c.key = key.text;
        c.pos = key.pos;
        switch (peek().kind) {
          case Tok::Ge: c.relation = Relation::AtLeast; break;
          case Tok::Le: c.relation = Relation::AtMost; break;
          case Tok::Assign: c.relation = Relation::Equal; break;
          default: expect(Tok::Ge, "relation ('>=', '=' or '<=')");
        }
        take();
        c.value = expect(Tok::Word, "constraint value").text;
        if (peek().kind == Tok::Word) c.unit = take().text;
        check_constraint(c, have_frequency);
        decl.constraints.push_back(std::move(c));
        if (peek().kind == Tok::Comma) {
          take();
          continue;
        }
        break;
      }
    }
    expect(Tok::RBrace, "'}' or ','");
    end_statement();
    declare(name);
    kinds_[decl.name] = decl.kind;
    prog.requires_.push_back(std::move(decl));
  }

  static void check_constraint(const Constraint& c, bool& have_frequency) {
    if (c.key == "frequency") {
      if (have_frequency) throw ParseError(c.pos, "more than one frequency constraint");
      have_frequency = true;
      auto v = parse_number(c.value);
      if (!v) throw ParseError(c.pos, "frequency value '" + c.value + "' is not a number");
      if (!(*v > 0.0)) throw ParseError(c.pos, "frequency must be > 0");
      if (!is_frequency_unit(c.unit)) throw ParseError(c.pos, "unknown frequency unit '" + c.unit + "'");
    } else if (c.key == "token_bytes") {
      if (c.relation != Relation::Equal) throw ParseError(c.pos, "token_bytes takes '='; sizes are fixed");
      auto v = parse_number(c.value);
      auto m = byte_multiplier(c.unit);
      if (!v || !m || *v < 0) throw ParseError(c.pos, "bad token size '" + c.value + " " + c.unit + "'");
    } else if (c.key == "resolution") {
      if (!parse_resolution(c.value)) throw ParseError(c.pos, "resolution must look like 320x240");
    } else if (c.key == "channels") {
      auto v = parse_number(c.value);
      if (!v || *v <= 0) throw ParseError(c.pos, "channels must be a positive number");
    }
  }

  void parse_binding(Program& prog) {
    BindingDecl b;
    const Token& name = expect_name("binding name");
    b.name = name.text;
    b.pos = name.pos;
    expect(Tok::Assign, "'='");
    const Token& fn = expect_name("function name");
    b.function = fn.text;
    resolve(fn);
    if (kinds_.count(fn.text) == 0) {
      throw ParseError(fn.pos, "'" + fn.text + "' is a binding, not a required node");
    }
    if (kinds_.at(fn.text) == NodeKind::Sensor) {
      throw ParseError(fn.pos, "sensor '" + fn.text + "' cannot be applied to inputs");
    }
    expect(Tok::LParen, "'('");
    for (;;) {
      const Token& arg = expect_name("argument name");
      resolve(arg);
      auto k = kinds_.find(arg.text);
      if (k != kinds_.end() && k->second != NodeKind::Sensor) {
        throw ParseError(arg.pos, "'" + arg.text + "' is not a sensor; pass the binding that applies it");
      }
      b.args.push_back(arg.text);
      if (peek().kind == Tok::Comma) {
        take();
        continue;
      }
      break;
    }
    expect(Tok::RParen, "')' or ','");
    b.policies.assign(b.args.size(), Policy::latest());
    if (peek().kind == Tok::At) {
      take();
      std::size_t idx = 0;
      for (;;) {
        if (idx >= b.args.size()) throw ParseError(peek().pos, "more policies than arguments");
        b.policies[idx++] = parse_policy();
        if (peek().kind == Tok::Comma) {
          take();
          continue;
        }
        break;
      }
    }
    end_statement();
    declare(name);
    prog.bindings.push_back(std::move(b));
  }

  Policy parse_policy() {
    const Token& t = expect(Tok::Word, "policy (latest, window(k) or fifo)");
    if (t.text == "latest") return Policy::latest();
    if (t.text == "fifo") return Policy::fifo();
    if (t.text == "window") {
      expect(Tok::LParen, "'('");
      const Token& k = expect(Tok::Word, "window size");
      auto v = parse_number(k.text);
      if (!v || *v < 1 || *v != static_cast<double>(static_cast<int>(*v))) {
        throw ParseError(k.pos, "window size must be a positive integer");
      }
      expect(Tok::RParen, "')'");
      return Policy::window(static_cast<int>(*v));
    }
    throw ParseError(t.pos, "unknown policy '" + t.text + "'");
  }

  void parse_output(Program& prog) {
    prog.outputs_pos = take().pos;
    for (;;) {
      const Token& n = expect_name("output name");
      resolve(n);
      prog.outputs.push_back(n.text);
      if (peek().kind == Tok::Comma) {
        take();
        continue;
      }
      break;
    }
    end_statement();
  }

  void resolve(const Token& name) const {
    if (names_.count(name.text) == 0) {
      throw ParseError(name.pos, "'" + name.text + "' is used before it is declared");
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::set<std::string> names_;
  std::map<std::string, NodeKind> kinds_;
};

}  // namespace detail

inline Program parse(std::string_view text) {
  return detail::Parser(detail::lex(text)).run();
}

// Canonical rendering: requires, then bindings, then outputs.
inline std::string pretty_print(const Program& prog) {
  if (prog.requires_.empty()) {
    throw Error(ErrorKind::InvalidGraph, "cannot print a program without requires");
  }
  std::ostringstream os;
  for (const auto& r : prog.requires_) {
    os << "require " << r.name << ' ' << to_string(r.kind) << " {";
    for (std::size_t i = 0; i < r.constraints.size(); ++i) {
      const auto& c = r.constraints[i];
      os << (i ? ", " : " ") << c.key << ' ' << to_string(c.relation) << ' ' << c.value;
      if (!c.unit.empty()) os << ' ' << c.unit;
    }
    os << " }\n";
  }
  for (const auto& b : prog.bindings) {
    os << b.name << " = " << b.function << '(';
    for (std::size_t i = 0; i < b.args.size(); ++i) os << (i ? ", " : "") << b.args[i];
    os << ')';
    const bool all_latest = std::all_of(b.policies.begin(), b.policies.end(),
                                        [](const Policy& p) { return p.is_latest(); });
    if (!all_latest) {
      os << " @ ";
      for (std::size_t i = 0; i < b.policies.size(); ++i) os << (i ? ", " : "") << b.policies[i].to_string();
    }
    os << '\n';
  }
  if (!prog.outputs.empty()) {
    os << "output ";
    for (std::size_t i = 0; i < prog.outputs.size(); ++i) os << (i ? ", " : "") << prog.outputs[i];
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Lowering

struct FrequencyConstraint {
  Relation relation;
  double hz;
};

// Every source constraint, keyed by node, in source order.
struct ConstraintSet {
  std::map<std::string, std::vector<Constraint>> by_node;

  bool empty() const {
    for (const auto& [_, v] : by_node) {
      if (!v.empty()) return false;
    }
    return true;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : by_node) n += v.size();
    return n;
  }

  std::optional<FrequencyConstraint> frequency(const std::string& node) const {
    auto it = by_node.find(node);
    if (it == by_node.end()) return std::nullopt;
    for (const auto& c : it->second) {
      if (c.key == "frequency") return FrequencyConstraint{c.relation, *detail::parse_number(c.value)};
    }
    return std::nullopt;
  }
};

struct Lowered {
  Mdfg graph;
  ConstraintSet constraints;
};

inline std::string port_name(std::size_t index) { return "in" + std::to_string(index); }

// One node per require, one edge per binding argument. Node rates come
// from frequency constraints; a non-sensor without one runs at the fastest
// rate among its producers.
inline Lowered lower(const Program& prog) {
  Lowered out;
  Mdfg& g = out.graph;

  for (const auto& r : prog.requires_) {
    NodeSpec n;
    n.name = r.name;
    n.kind = r.kind;
    std::optional<double> token;
    std::int64_t res_w = 0, res_h = 0;
    double channels = 3.0;
    for (const auto& c : r.constraints) {
      out.constraints.by_node[r.name].push_back(c);
      if (c.key == "frequency") {
        n.rate_hz = *detail::parse_number(c.value);
      } else if (c.key == "token_bytes") {
        token = *detail::parse_number(c.value) * *detail::byte_multiplier(c.unit);
      } else if (c.key == "resolution") {
        std::tie(res_w, res_h) = *detail::parse_resolution(c.value);
        n.attrs["resolution"] = c.value;
      } else if (c.key == "channels") {
        channels = *detail::parse_number(c.value);
        n.attrs["channels"] = c.value;
      } else {
        n.attrs[c.key] = c.value + (c.unit.empty() ? "" : " " + c.unit);
      }
    }
    if (token) {
      n.token_bytes = static_cast<std::int64_t>(std::llround(*token));
    } else if (res_w > 0) {
      n.token_bytes = static_cast<std::int64_t>(std::llround(static_cast<double>(res_w * res_h) * channels));
    } else if (r.kind != NodeKind::Actuator) {
      throw ParseError(r.pos, "node '" + r.name + "' needs token_bytes or a resolution");
    }
    if (r.kind == NodeKind::Sensor && n.rate_hz <= 0.0) {
      throw ParseError(r.pos, "sensor '" + r.name + "' needs a frequency constraint");
    }
    g.nodes.emplace(n.name, std::move(n));
  }

  std::map<std::string, std::string> value_node;  // binding or sensor -> producing node
  for (const auto& r : prog.requires_) value_node[r.name] = r.name;
  std::map<std::string, const BindingDecl*> applied;

  for (const auto& b : prog.bindings) {
    value_node[b.name] = b.function;
    auto prior = applied.find(b.function);
    if (prior != applied.end()) {
      if (prior->second->args.size() != b.args.size()) {
        throw ParseError(b.pos, "arity mismatch: '" + b.function + "' applied to " +
                                    std::to_string(b.args.size()) + " inputs here but " +
                                    std::to_string(prior->second->args.size()) + " before");
      }
      std::vector<std::string> a;
      std::vector<std::string> p;
      for (const auto& x : b.args) a.push_back(value_node.at(x));
      for (const auto& x : prior->second->args) p.push_back(value_node.at(x));
      if (a != p || b.policies != prior->second->policies) {
        throw ParseError(b.pos, "'" + b.function + "' is already applied to different inputs");
      }
      continue;
    }
    applied[b.function] = &b;
    NodeSpec& fn = g.nodes.at(b.function);
    double fastest = 0.0;
    for (std::size_t i = 0; i < b.args.size(); ++i) {
      const std::string& producer = value_node.at(b.args[i]);
      fn.ports.push_back(port_name(i));
      g.edges.push_back({producer, b.function, port_name(i), b.policies[i]});
      fastest = std::max(fastest, g.nodes.at(producer).rate_hz);
    }
    if (fn.rate_hz <= 0.0) fn.rate_hz = fastest;
  }

  for (const auto& r : prog.requires_) {
    if (g.nodes.at(r.name).rate_hz <= 0.0) {
      throw ParseError(r.pos, "node '" + r.name + "' has no frequency and no inputs to inherit one from");
    }
  }
  for (const auto& o : prog.outputs) g.outputs.push_back(value_node.at(o));
  return out;
}

}  // namespace tsdf::dsl
