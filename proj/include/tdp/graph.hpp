#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdp {

enum class Opcode : uint8_t { IN = 0, ADD, SUB, MUL, DIV };

constexpr int opcode_arity(Opcode op) { return op == Opcode::IN ? 0 : 2; }
const char* opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view s);

// paper-strict hardware supports ADD/MUL only
constexpr bool opcode_paper_strict_ok(Opcode op) {
  return op == Opcode::IN || op == Opcode::ADD || op == Opcode::MUL;
}

struct FanoutEntry {
  uint32_t dst = 0;
  uint8_t slot = 0;
  bool operator==(const FanoutEntry&) const = default;
};

struct Node {
  uint32_t id = 0;
  Opcode opcode = Opcode::IN;
  uint32_t fanin = 0;                // incoming edge count, derived from edges
  std::vector<FanoutEntry> fanout;   // ordered; order is part of the structure
};

// Directed acyclic graph of float operators. Node ids are dense 0..N-1 in
// `nodes` (index == id for a structurally complete graph). `inputs` holds the
// initial value of every IN node, keyed by id.
struct DataflowGraph {
  std::vector<Node> nodes;
  std::map<uint32_t, float> inputs;

  size_t node_count() const { return nodes.size(); }
  uint64_t edge_count() const {
    uint64_t e = 0;
    for (const auto& n : nodes) e += n.fanout.size();
    return e;
  }
};

// structural equality; float values compared bit-for-bit
bool graphs_equal(const DataflowGraph& a, const DataflowGraph& b);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks every DataflowGraph invariant: dense ids, arity == fanin, exactly one
// edge per (dst, slot), no duplicate fanout entries, acyclic, IN values
// present. Violations are data, not faults.
ValidationReport validate_graph(const DataflowGraph& g, bool paper_strict = false);

// Line-oriented text format ('#' comments):
//   node <id> <OPCODE>
//   edge <src> <dst> <slot>
//   init <id> <float>
// Syntax problems throw ParseError with the line number; semantic problems are
// left to validate_graph.
DataflowGraph parse_graph(std::string_view text, const std::string& filename = "<text>");
std::string write_graph(const DataflowGraph& g);

DataflowGraph load_graph_file(const std::string& path);
void save_graph_file(const DataflowGraph& g, const std::string& path);

struct GenParams {
  uint32_t n_nodes = 1000;
  uint32_t n_layers = 10;
  double mean_fanout = 2.0;
  uint64_t seed = 1;
  bool paper_strict = false;
};

// Seeded layered DAG generator: layer 0 is all IN nodes, edges go from earlier
// to later layers only, layer widths taper geometrically (wide input front,
// thin deep tail) and out-degrees follow a capped geometric distribution with
// the given mean. Deterministic for a fixed parameter set.
// Throws std::invalid_argument on infeasible parameters.
DataflowGraph generate_layered_dag(const GenParams& p);

// Reference semantics: evaluate every node exactly once in topological order,
// IEEE-754 single precision. This is the oracle the simulator is checked
// against bit-for-bit. Division by zero yields inf/NaN, not an error.
std::vector<float> evaluate_sequential(const DataflowGraph& g);

float apply_opcode(Opcode op, float a, float b);

}  // namespace tdp
