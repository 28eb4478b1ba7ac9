#include "tdp/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "tdp/errors.hpp"
#include "tdp/util.hpp"

namespace tdp {

const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::IN: return "IN";
    case Opcode::ADD: return "ADD";
    case Opcode::SUB: return "SUB";
    case Opcode::MUL: return "MUL";
    case Opcode::DIV: return "DIV";
  }
  return "?";
}

std::optional<Opcode> opcode_from_name(std::string_view s) {
  if (s == "IN") return Opcode::IN;
  if (s == "ADD") return Opcode::ADD;
  if (s == "SUB") return Opcode::SUB;
  if (s == "MUL") return Opcode::MUL;
  if (s == "DIV") return Opcode::DIV;
  return std::nullopt;
}

float apply_opcode(Opcode op, float a, float b) {
  switch (op) {
    case Opcode::ADD: return a + b;
    case Opcode::SUB: return a - b;
    case Opcode::MUL: return a * b;
    case Opcode::DIV: return a / b;
    case Opcode::IN: break;
  }
  return a;
}

bool graphs_equal(const DataflowGraph& a, const DataflowGraph& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    const Node& x = a.nodes[i];
    const Node& y = b.nodes[i];
    if (x.id != y.id || x.opcode != y.opcode || x.fanin != y.fanin || x.fanout != y.fanout)
      return false;
  }
  if (a.inputs.size() != b.inputs.size()) return false;
  auto ia = a.inputs.begin();
  auto ib = b.inputs.begin();
  for (; ia != a.inputs.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (std::bit_cast<uint32_t>(ia->second) != std::bit_cast<uint32_t>(ib->second)) return false;
  }
  return true;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& v : violations) {
    out += v;
    out += '\n';
  }
  return out;
}

ValidationReport validate_graph(const DataflowGraph& g, bool paper_strict) {
  ValidationReport rep;
  auto bad = [&rep](std::string msg) { rep.violations.push_back(std::move(msg)); };

  const size_t n = g.nodes.size();
  for (size_t i = 0; i < n; ++i) {
    if (g.nodes[i].id != i) {
      bad("node index " + std::to_string(i) + ": id " + std::to_string(g.nodes[i].id) +
          " breaks dense 0..N-1 numbering");
      return rep;  // downstream checks assume index == id
    }
  }

  // (dst, slot) filled exactly once, no duplicate fanout entries, ids in range
  std::vector<std::array<uint32_t, 2>> slot_count(n, {0, 0});
  for (const Node& u : g.nodes) {
    if (paper_strict && !opcode_paper_strict_ok(u.opcode))
      bad("node " + std::to_string(u.id) + ": opcode " + opcode_name(u.opcode) +
          " not allowed in paper-strict mode");
    std::vector<FanoutEntry> seen;
    for (const FanoutEntry& f : u.fanout) {
      if (f.dst >= n) {
        bad("edge " + std::to_string(u.id) + "->" + std::to_string(f.dst) +
            ": destination id out of range");
        continue;
      }
      if (f.slot > 1) {
        bad("edge " + std::to_string(u.id) + "->" + std::to_string(f.dst) + ": slot " +
            std::to_string(f.slot) + " out of range");
        continue;
      }
      if (std::find(seen.begin(), seen.end(), f) != seen.end())
        bad("node " + std::to_string(u.id) + ": duplicate fanout entry (" +
            std::to_string(f.dst) + ", " + std::to_string(f.slot) + ")");
      seen.push_back(f);
      slot_count[f.dst][f.slot] += 1;
    }
  }

  for (const Node& v : g.nodes) {
    const int arity = opcode_arity(v.opcode);
    uint32_t incoming = slot_count[v.id][0] + slot_count[v.id][1];
    if (v.fanin != incoming)
      bad("node " + std::to_string(v.id) + ": fanin field " + std::to_string(v.fanin) +
          " != incoming edge count " + std::to_string(incoming));
    if (arity == 0) {
      if (incoming != 0)
        bad("node " + std::to_string(v.id) + ": IN node has incoming edges");
      if (g.inputs.find(v.id) == g.inputs.end())
        bad("node " + std::to_string(v.id) + ": IN node has no init value");
    } else {
      for (uint8_t s = 0; s < 2; ++s) {
        if (slot_count[v.id][s] == 0)
          bad("node " + std::to_string(v.id) + ": missing operand slot " + std::to_string(s));
        else if (slot_count[v.id][s] > 1)
          bad("node " + std::to_string(v.id) + ": operand slot " + std::to_string(s) +
              " filled by " + std::to_string(slot_count[v.id][s]) + " edges");
      }
      if (g.inputs.find(v.id) != g.inputs.end())
        bad("node " + std::to_string(v.id) + ": init value on non-IN node");
    }
  }

  // acyclicity via Kahn's algorithm
  std::vector<uint32_t> indeg(n, 0);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout)
      if (f.dst < n) indeg[f.dst]++;
  std::queue<uint32_t> q;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push(static_cast<uint32_t>(i));
  size_t visited = 0;
  while (!q.empty()) {
    uint32_t u = q.front();
    q.pop();
    ++visited;
    for (const FanoutEntry& f : g.nodes[u].fanout) {
      if (f.dst < n && --indeg[f.dst] == 0) q.push(f.dst);
    }
  }
  if (visited != n) bad("cycle detected: " + std::to_string(n - visited) + " node(s) on cycles");

  for (const auto& [id, val] : g.inputs) {
    (void)val;
    if (id >= n) bad("init " + std::to_string(id) + ": id out of range");
  }

  return rep;
}

namespace {

std::string format_float(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_float(std::string_view s, float& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace

DataflowGraph parse_graph(std::string_view text, const std::string& filename) {
  struct RawEdge {
    uint32_t src, dst;
    uint8_t slot;
  };
  std::vector<std::pair<uint32_t, Opcode>> raw_nodes;
  std::vector<RawEdge> raw_edges;
  std::vector<std::pair<uint32_t, float>> raw_inits;

  uint64_t lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++lineno;

    if (size_t h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    auto toks = split_ws(line);
    if (toks.empty()) continue;

    if (toks[0] == "node") {
      uint32_t id;
      if (toks.size() != 3 || !parse_uint(toks[1], id))
        throw ParseError(filename, lineno, "expected: node <id> <OPCODE>");
      auto op = opcode_from_name(toks[2]);
      if (!op) throw ParseError(filename, lineno, "unknown opcode '" + std::string(toks[2]) + "'");
      raw_nodes.emplace_back(id, *op);
    } else if (toks[0] == "edge") {
      uint32_t src, dst, slot;
      if (toks.size() != 4 || !parse_uint(toks[1], src) || !parse_uint(toks[2], dst) ||
          !parse_uint(toks[3], slot) || slot > 1)
        throw ParseError(filename, lineno, "expected: edge <src> <dst> <slot 0|1>");
      raw_edges.push_back({src, dst, static_cast<uint8_t>(slot)});
    } else if (toks[0] == "init") {
      uint32_t id;
      float v;
      if (toks.size() != 3 || !parse_uint(toks[1], id) || !parse_float(toks[2], v))
        throw ParseError(filename, lineno, "expected: init <id> <float>");
      raw_inits.emplace_back(id, v);
    } else {
      throw ParseError(filename, lineno, "unknown directive '" + std::string(toks[0]) + "'");
    }
  }

  DataflowGraph g;
  uint32_t max_id = 0;
  for (auto& [id, op] : raw_nodes) max_id = std::max(max_id, id);
  if (!raw_nodes.empty()) g.nodes.resize(static_cast<size_t>(max_id) + 1);
  std::vector<bool> declared(g.nodes.size(), false);
  for (auto& [id, op] : raw_nodes) {
    // duplicate declarations are a semantic problem; keep the first
    if (!declared[id]) {
      g.nodes[id].id = id;
      g.nodes[id].opcode = op;
      declared[id] = true;
    }
  }
  for (size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].id = static_cast<uint32_t>(i);
  for (const auto& e : raw_edges) {
    if (e.src < g.nodes.size()) g.nodes[e.src].fanout.push_back({e.dst, e.slot});
    if (e.dst < g.nodes.size()) g.nodes[e.dst].fanin += 1;
  }
  for (auto& [id, v] : raw_inits) g.inputs[id] = v;
  // undeclared ids inside the dense range surface as arity violations in
  // validate_graph (their opcode defaults to IN with no init)
  return g;
}

std::string write_graph(const DataflowGraph& g) {
  std::string out;
  out.reserve(g.nodes.size() * 24);
  for (const Node& n : g.nodes) {
    out += "node ";
    out += std::to_string(n.id);
    out += ' ';
    out += opcode_name(n.opcode);
    out += '\n';
  }
  for (const Node& n : g.nodes) {
    for (const FanoutEntry& f : n.fanout) {
      out += "edge ";
      out += std::to_string(n.id);
      out += ' ';
      out += std::to_string(f.dst);
      out += ' ';
      out += std::to_string(static_cast<int>(f.slot));
      out += '\n';
    }
  }
  for (const auto& [id, v] : g.inputs) {
    out += "init ";
    out += std::to_string(id);
    out += ' ';
    out += format_float(v);
    out += '\n';
  }
  return out;
}

DataflowGraph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str(), path);
}

void save_graph_file(const DataflowGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << write_graph(g);
}

DataflowGraph generate_layered_dag(const GenParams& p) {
  if (p.n_nodes < 1) throw std::invalid_argument("generator: n_nodes must be >= 1");
  if (p.n_layers < 1) throw std::invalid_argument("generator: n_layers must be >= 1");
  if (p.n_layers > p.n_nodes)
    throw std::invalid_argument("generator: n_layers exceeds n_nodes");
  if (!(p.mean_fanout > 0.0)) throw std::invalid_argument("generator: mean_fanout must be > 0");

  Rng rng(p.seed);
  const uint32_t n = p.n_nodes;
  const uint32_t layers = p.n_layers;

  // Layer widths taper geometrically so the input front is wide and the deep
  // tail thin: weight(k) = taper^k, with the front doubled. Largest-remainder
  // rounding keeps the total exact; every layer keeps at least one node.
  std::vector<uint32_t> width(layers, 1);
  {
    const double taper = 0.93;
    std::vector<double> w(layers);
    double sum = 0.0;
    double t = 1.0;
    for (uint32_t k = 0; k < layers; ++k) {
      w[k] = (k == 0) ? 2.0 * t : t;
      sum += w[k];
      t *= taper;
    }
    uint32_t assigned = layers;  // one guaranteed slot per layer
    const uint32_t spare = n - layers;
    std::vector<std::pair<double, uint32_t>> frac(layers);
    uint64_t given = 0;
    for (uint32_t k = 0; k < layers; ++k) {
      double exact = spare * (w[k] / sum);
      uint32_t whole = static_cast<uint32_t>(exact);
      width[k] += whole;
      given += whole;
      frac[k] = {exact - whole, k};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (uint64_t i = 0; i < spare - given; ++i) width[frac[i % layers].second] += 1;
    (void)assigned;
  }

  DataflowGraph g;
  g.nodes.resize(n);

  std::vector<uint32_t> layer_start(layers + 1, 0);
  for (uint32_t k = 0; k < layers; ++k) layer_start[k + 1] = layer_start[k] + width[k];

  // Fanout capacity per node ~ 1 + Geometric, mean ~= mean_fanout. The pool
  // holds nodes that still accept consumers; biased toward the previous layer
  // so the deep tail stays chained, with long-range edges from the wide front
  // mixing high- and low-criticality work in every processor's queue.
  const double geo_p = 1.0 / std::max(1.0, p.mean_fanout);
  std::vector<uint32_t> capacity(n, 0);
  std::vector<uint32_t> pool;  // node ids with remaining capacity
  pool.reserve(n);

  auto take_from_pool = [&](uint32_t pool_idx) -> uint32_t {
    uint32_t id = pool[pool_idx];
    if (--capacity[id] == 0) {
      pool[pool_idx] = pool.back();
      pool.pop_back();
    }
    return id;
  };

  const Opcode op_table[4] = {Opcode::ADD, Opcode::SUB, Opcode::MUL, Opcode::DIV};
  // ADD/MUL heavy mix; factorization kernels are mostly multiply-accumulate
  const uint32_t op_weights[4] = {40, 15, 35, 10};

  for (uint32_t k = 0; k < layers; ++k) {
    const uint32_t lo = layer_start[k];
    const uint32_t hi = layer_start[k + 1];
    const uint32_t prev_lo = (k > 0) ? layer_start[k - 1] : 0;
    for (uint32_t id = lo; id < hi; ++id) {
      Node& nd = g.nodes[id];
      nd.id = id;
      if (k == 0) {
        nd.opcode = Opcode::IN;
        g.inputs[id] = rng.uniform_float(0.5f, 2.0f);
      } else {
        if (p.paper_strict) {
          nd.opcode = (rng.below(100) < 55) ? Opcode::ADD : Opcode::MUL;
        } else {
          uint32_t r = rng.below(100);
          uint32_t acc = 0;
          nd.opcode = Opcode::ADD;
          for (int i = 0; i < 4; ++i) {
            acc += op_weights[i];
            if (r < acc) {
              nd.opcode = op_table[i];
              break;
            }
          }
        }
        for (uint8_t slot = 0; slot < 2; ++slot) {
          uint32_t src;
          // slot 0 always chains to the previous layer, so the layer count is
          // a real depth knob (thin tail layers form a critical spine); slot 1
          // spreads across history through the capacity pool, mixing long- and
          // short-path work in every processor's ready set
          if (slot == 0) {
            src = prev_lo + rng.below(lo - prev_lo);
          } else if (!pool.empty()) {
            src = take_from_pool(rng.below(static_cast<uint32_t>(pool.size())));
          } else {
            src = rng.below(lo);  // capacity exhausted everywhere: any earlier node
          }
          g.nodes[src].fanout.push_back({id, slot});
          nd.fanin += 1;
        }
      }
      capacity[id] = 1 + rng.geometric(geo_p);
      pool.push_back(id);
    }
  }

  return g;
}

std::vector<float> evaluate_sequential(const DataflowGraph& g) {
  const size_t n = g.nodes.size();
  std::vector<float> value(n, 0.0f);
  std::vector<std::array<float, 2>> operand(n, {0.0f, 0.0f});
  std::vector<uint32_t> missing(n, 0);
  std::vector<uint32_t> indeg(n, 0);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout) indeg[f.dst]++;
  for (size_t i = 0; i < n; ++i) missing[i] = indeg[i];

  std::queue<uint32_t> ready;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(static_cast<uint32_t>(i));

  size_t done = 0;
  while (!ready.empty()) {
    uint32_t u = ready.front();
    ready.pop();
    ++done;
    const Node& nd = g.nodes[u];
    if (nd.opcode == Opcode::IN) {
      auto it = g.inputs.find(u);
      value[u] = (it != g.inputs.end()) ? it->second : 0.0f;
    } else {
      value[u] = apply_opcode(nd.opcode, operand[u][0], operand[u][1]);
    }
    for (const FanoutEntry& f : nd.fanout) {
      operand[f.dst][f.slot] = value[u];
      if (--missing[f.dst] == 0) ready.push(f.dst);
    }
  }
  if (done != n) throw ValidationError("evaluate_sequential: graph has a cycle");
  return value;
}

}  // namespace tdp
