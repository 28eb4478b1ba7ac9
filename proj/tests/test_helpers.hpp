#pragma once

#include <map>
#include <vector>

#include "tdp/graph.hpp"

namespace tdp_test {

// small-graph builder: ops[i] names node i's opcode, edges are (src,dst,slot)
inline tdp::DataflowGraph make_graph(const std::vector<tdp::Opcode>& ops,
                                     const std::vector<std::array<uint32_t, 3>>& edges,
                                     const std::map<uint32_t, float>& inits) {
  tdp::DataflowGraph g;
  g.nodes.resize(ops.size());
  for (uint32_t i = 0; i < ops.size(); ++i) {
    g.nodes[i].id = i;
    g.nodes[i].opcode = ops[i];
  }
  for (const auto& e : edges) {
    g.nodes[e[0]].fanout.push_back({e[1], static_cast<uint8_t>(e[2])});
    g.nodes[e[1]].fanin += 1;
  }
  g.inputs = inits;
  return g;
}

// IN(a), IN(b) -> op; node 2 is the result
inline tdp::DataflowGraph make_binop(tdp::Opcode op, float a, float b) {
  return make_graph({tdp::Opcode::IN, tdp::Opcode::IN, op},
                    {{0, 2, 0}, {1, 2, 1}}, {{0, a}, {1, b}});
}

// k independent chains of the given length (first node of each chain is IN)
inline tdp::DataflowGraph make_chains(uint32_t k, uint32_t len) {
  tdp::DataflowGraph g;
  uint32_t n = k * len;
  g.nodes.resize(n);
  for (uint32_t c = 0; c < k; ++c) {
    for (uint32_t i = 0; i < len; ++i) {
      uint32_t id = c * len + i;
      g.nodes[id].id = id;
      if (i == 0) {
        g.nodes[id].opcode = tdp::Opcode::IN;
        g.inputs[id] = 1.0f + static_cast<float>(c);
      } else {
        g.nodes[id].opcode = tdp::Opcode::ADD;
        // both operands from the previous chain node
        g.nodes[id - 1].fanout.push_back({id, 0});
        g.nodes[id - 1].fanout.push_back({id, 1});
        g.nodes[id].fanin = 2;
      }
    }
  }
  return g;
}

}  // namespace tdp_test
