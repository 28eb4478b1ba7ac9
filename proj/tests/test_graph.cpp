#include <doctest.h>

#include <bit>
#include <cmath>
#include <functional>

#include "tdp/errors.hpp"
#include "tdp/graph.hpp"
#include "tdp/util.hpp"
#include "test_helpers.hpp"

using namespace tdp;
using tdp_test::make_binop;
using tdp_test::make_graph;

TEST_SUITE_BEGIN("graph");

TEST_CASE("opcode arity and names") {
  CHECK(opcode_arity(Opcode::IN) == 0);
  CHECK(opcode_arity(Opcode::ADD) == 2);
  CHECK(opcode_arity(Opcode::DIV) == 2);
  CHECK(opcode_from_name("MUL") == Opcode::MUL);
  CHECK(!opcode_from_name("NOP").has_value());
}

TEST_CASE("validate: single IN node is the smallest legal graph") {
  auto g = make_graph({Opcode::IN}, {}, {{0, 1.0f}});
  CHECK(validate_graph(g).ok());
}

TEST_CASE("validate: missing operand slot") {
  auto g = make_graph({Opcode::IN, Opcode::ADD}, {{0, 1, 0}}, {{0, 1.0f}});
  auto rep = validate_graph(g);
  REQUIRE(!rep.ok());
  bool found = false;
  for (auto& v : rep.violations)
    if (v.find("missing operand slot") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate: two-node cycle detected") {
  DataflowGraph g;
  g.nodes.resize(2);
  for (uint32_t i = 0; i < 2; ++i) {
    g.nodes[i].id = i;
    g.nodes[i].opcode = Opcode::ADD;
    g.nodes[i].fanin = 2;
  }
  g.nodes[0].fanout = {{1, 0}, {1, 1}};
  g.nodes[1].fanout = {{0, 0}, {0, 1}};
  auto rep = validate_graph(g);
  REQUIRE(!rep.ok());
  bool found = false;
  for (auto& v : rep.violations)
    if (v.find("cycle detected") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate: paper-strict rejects SUB/DIV") {
  auto g = make_binop(Opcode::DIV, 1.0f, 2.0f);
  CHECK(validate_graph(g, false).ok());
  CHECK(!validate_graph(g, true).ok());
}

TEST_CASE("validate: duplicate slot fill") {
  auto g = make_graph({Opcode::IN, Opcode::IN, Opcode::ADD},
                      {{0, 2, 0}, {1, 2, 0}}, {{0, 1.0f}, {1, 2.0f}});
  auto rep = validate_graph(g);
  CHECK(!rep.ok());
}

TEST_CASE("parse: constructed three-node fixture") {
  const char* text =
      "node 0 IN\n"
      "node 1 IN\n"
      "node 2 ADD\n"
      "edge 0 2 0\n"
      "edge 1 2 1\n"
      "init 0 2.0\n"
      "init 1 3.0\n";
  DataflowGraph g = parse_graph(text);
  REQUIRE(g.node_count() == 3);
  CHECK(g.nodes[2].opcode == Opcode::ADD);
  CHECK(g.nodes[0].fanout.size() == 1);
  CHECK(g.inputs.at(0) == 2.0f);
  CHECK(validate_graph(g).ok());
}

TEST_CASE("parse: comments and blank lines") {
  DataflowGraph g = parse_graph("# header\n\nnode 0 IN # trailing\ninit 0 1.5\n");
  CHECK(g.node_count() == 1);
  CHECK(validate_graph(g).ok());
}

TEST_CASE("parse: malformed line reports its number") {
  try {
    parse_graph("node 0 IN\ninit 0 1.0\nedge 0\n", "f.graph");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("parse: unknown directive") {
  CHECK_THROWS_AS(parse_graph("frobnicate 1 2\n"), ParseError);
}

TEST_CASE("write/parse round-trip is the identity on a generated graph") {
  GenParams p;
  p.n_nodes = 1000;
  p.n_layers = 12;
  p.mean_fanout = 2.0;
  p.seed = 99;
  DataflowGraph g = generate_layered_dag(p);
  DataflowGraph g2 = parse_graph(write_graph(g));
  CHECK(graphs_equal(g, g2));
}

TEST_CASE("write/parse round-trips special float values") {
  auto g = make_graph({Opcode::IN, Opcode::IN}, {},
                      {{0, std::bit_cast<float>(0x7f800000u)},   // +inf
                       {1, 1.17549435e-38f}});
  DataflowGraph g2 = parse_graph(write_graph(g));
  CHECK(graphs_equal(g, g2));
}

TEST_CASE("generator: degenerate single node") {
  GenParams p;
  p.n_nodes = 1;
  p.n_layers = 1;
  p.seed = 7;
  DataflowGraph g = generate_layered_dag(p);
  REQUIRE(g.node_count() == 1);
  CHECK(g.nodes[0].opcode == Opcode::IN);
  CHECK(validate_graph(g).ok());
}

TEST_CASE("generator: determinism at 30000 nodes") {
  GenParams p;
  p.n_nodes = 30000;
  p.n_layers = 60;
  p.mean_fanout = 2.0;
  p.seed = 42;
  DataflowGraph a = generate_layered_dag(p);
  DataflowGraph b = generate_layered_dag(p);
  CHECK(graphs_equal(a, b));
  CHECK(a.node_count() == 30000);
}

TEST_CASE("generator: output is valid across seeds") {
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    GenParams p;
    p.n_nodes = 60 + static_cast<uint32_t>(seed * 17 % 400);
    p.n_layers = 1 + static_cast<uint32_t>(seed % 12);
    p.mean_fanout = 0.5 + (seed % 7) * 0.5;
    p.seed = seed;
    p.paper_strict = (seed % 3 == 0);
    DataflowGraph g = generate_layered_dag(p);
    CHECK(g.node_count() == p.n_nodes);
    auto rep = validate_graph(g, p.paper_strict);
    if (!rep.ok()) {
      CAPTURE(seed);
      FAIL_CHECK(rep.to_string());
    }
  }
}

TEST_CASE("generator: infeasible parameters") {
  GenParams p;
  p.n_nodes = 3;
  p.n_layers = 5;
  CHECK_THROWS_AS(generate_layered_dag(p), std::invalid_argument);
  p.n_layers = 2;
  p.mean_fanout = 0.0;
  CHECK_THROWS_AS(generate_layered_dag(p), std::invalid_argument);
}

TEST_CASE("evaluate: 2 + 3 = 5") {
  auto g = make_binop(Opcode::ADD, 2.0f, 3.0f);
  auto v = evaluate_sequential(g);
  CHECK(v[2] == 5.0f);
}

TEST_CASE("evaluate: division by zero is IEEE inf") {
  auto g = make_binop(Opcode::DIV, 1.0f, 0.0f);
  auto v = evaluate_sequential(g);
  CHECK(std::isinf(v[2]));
  CHECK(v[2] > 0);
}

namespace {

// independent oracle: memoized recursion from outputs back to inputs
std::vector<float> recursive_eval(const DataflowGraph& g) {
  const size_t n = g.nodes.size();
  std::vector<std::array<std::pair<bool, uint32_t>, 2>> src(n);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout) src[f.dst][f.slot] = {true, u.id};
  std::vector<float> memo(n, 0.0f);
  std::vector<uint8_t> have(n, 0);
  std::function<float(uint32_t)> eval = [&](uint32_t id) -> float {
    if (have[id]) return memo[id];
    have[id] = 1;  // DAG: no cycles, safe to mark before descending
    const Node& nd = g.nodes[id];
    float v;
    if (nd.opcode == Opcode::IN) {
      v = g.inputs.at(id);
    } else {
      float a = eval(src[id][0].second);
      float b = eval(src[id][1].second);
      v = apply_opcode(nd.opcode, a, b);
    }
    memo[id] = v;
    return v;
  };
  for (uint32_t id = 0; id < n; ++id) eval(id);
  return memo;
}

}  // namespace

TEST_CASE("evaluate: matches independent recursive evaluator on random graphs") {
  for (uint64_t seed : {11u, 22u, 33u}) {
    GenParams p;
    p.n_nodes = 1000;
    p.n_layers = 15;
    p.mean_fanout = 2.5;
    p.seed = seed;
    DataflowGraph g = generate_layered_dag(p);
    auto a = evaluate_sequential(g);
    auto b = recursive_eval(g);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(std::bit_cast<uint32_t>(a[i]) == std::bit_cast<uint32_t>(b[i]));
  }
}

TEST_SUITE_END();
