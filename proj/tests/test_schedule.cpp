#include <doctest.h>

#include <functional>
#include <set>

#include "tdp/errors.hpp"
#include "tdp/schedule.hpp"
#include "tdp/util.hpp"
#include "test_helpers.hpp"

using namespace tdp;
using tdp_test::make_graph;

TEST_SUITE_BEGIN("schedule");

TEST_CASE("criticality: chain a->b->c") {
  auto g = make_graph({Opcode::IN, Opcode::ADD, Opcode::ADD},
                      {{0, 1, 0}, {0, 1, 1}, {1, 2, 0}, {1, 2, 1}}, {{0, 1.0f}});
  auto crit = compute_criticality(g);
  CHECK(crit[0] == 2);
  CHECK(crit[1] == 1);
  CHECK(crit[2] == 0);
}

TEST_CASE("criticality: single node is a sink") {
  auto g = make_graph({Opcode::IN}, {}, {{0, 1.0f}});
  CHECK(compute_criticality(g)[0] == 0);
}

TEST_CASE("criticality: strict decrease along every edge") {
  GenParams p;
  p.n_nodes = 800;
  p.n_layers = 10;
  p.seed = 5;
  DataflowGraph g = generate_layered_dag(p);
  auto crit = compute_criticality(g);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout) CHECK(crit[u.id] >= crit[f.dst] + 1);
}

namespace {

// brute force: enumerate every path to a sink, exponential is fine <= 12 nodes
uint32_t longest_path_bruteforce(const DataflowGraph& g, uint32_t start) {
  const Node& n = g.nodes[start];
  uint32_t best = 0;
  for (const FanoutEntry& f : n.fanout)
    best = std::max(best, 1 + longest_path_bruteforce(g, f.dst));
  return best;
}

// random small DAG: edges only from lower to higher ids so it is acyclic
DataflowGraph random_small_dag(uint64_t seed, uint32_t max_nodes) {
  Rng rng(seed);
  uint32_t n = 2 + rng.below(max_nodes - 1);
  std::vector<Opcode> ops(n);
  std::vector<std::array<uint32_t, 3>> edges;
  std::map<uint32_t, float> inits;
  uint32_t n_in = 1 + rng.below(std::max(1u, n / 2));
  n_in = std::min(n_in, n);
  for (uint32_t i = 0; i < n; ++i) {
    if (i < n_in) {
      ops[i] = Opcode::IN;
      inits[i] = 1.0f;
    } else {
      ops[i] = (rng.below(2) == 0) ? Opcode::ADD : Opcode::MUL;
      for (uint8_t slot = 0; slot < 2; ++slot) edges.push_back({rng.below(i), i, slot});
    }
  }
  return make_graph(ops, edges, inits);
}

}  // namespace

TEST_CASE("criticality: equals exhaustive path enumeration on 200+ random DAGs") {
  uint32_t checked = 0;
  for (uint64_t seed = 1; checked < 220; ++seed) {
    DataflowGraph g = random_small_dag(seed, 11);
    if (!validate_graph(g).ok()) continue;
    ++checked;
    auto crit = compute_criticality(g);
    for (uint32_t v = 0; v < g.node_count(); ++v)
      CHECK(crit[v] == longest_path_bruteforce(g, v));
  }
}

TEST_CASE("placement: 4 nodes on 2x2 round robin puts one per PE") {
  auto g = make_graph({Opcode::IN, Opcode::IN, Opcode::IN, Opcode::IN}, {},
                      {{0, 1.f}, {1, 1.f}, {2, 1.f}, {3, 1.f}});
  auto placement = place_nodes(g, 2, 2);
  std::set<std::pair<uint16_t, uint16_t>> distinct;
  for (auto c : placement) distinct.insert({c.x, c.y});
  CHECK(distinct.size() == 4);
}

TEST_CASE("placement: 1x1 grid puts everything on PE (0,0)") {
  GenParams p;
  p.n_nodes = 50;
  p.n_layers = 5;
  p.seed = 3;
  DataflowGraph g = generate_layered_dag(p);
  for (auto c : place_nodes(g, 1, 1)) {
    CHECK(c.x == 0);
    CHECK(c.y == 0);
  }
}

TEST_CASE("placement: round robin balances within one node across seeds") {
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    GenParams p;
    p.n_nodes = 100 + static_cast<uint32_t>(seed * 37 % 300);
    p.n_layers = 8;
    p.seed = seed;
    DataflowGraph g = generate_layered_dag(p);
    auto placement = place_nodes(g, 4, 3);
    std::vector<uint32_t> count(12, 0);
    for (auto c : placement) count[c.y * 4 + c.x]++;
    uint32_t mn = UINT32_MAX, mx = 0;
    for (uint32_t c : count) {
      mn = std::min(mn, c);
      mx = std::max(mx, c);
    }
    CHECK(mx - mn <= 1);
  }
}

TEST_CASE("placement: hash policy is deterministic") {
  GenParams p;
  p.n_nodes = 200;
  p.n_layers = 10;
  p.seed = 8;
  DataflowGraph g = generate_layered_dag(p);
  auto h1 = place_nodes(g, 4, 4, PlacePolicy::Hash);
  auto h2 = place_nodes(g, 4, 4, PlacePolicy::Hash);
  CHECK(h1 == h2);
}

TEST_CASE("layout: addresses follow decreasing criticality") {
  auto g = make_graph({Opcode::IN, Opcode::IN, Opcode::IN}, {},
                      {{0, 1.f}, {1, 1.f}, {2, 1.f}});
  CriticalityLabels labels = {5, 9, 1};
  std::vector<PeCoord> placement(3, PeCoord{0, 0});
  LayoutPlan plan = assign_local_addresses(g, labels, placement, 1, 1);
  CHECK(plan.local_addr[1] == 0);  // crit 9
  CHECK(plan.local_addr[0] == 1);  // crit 5
  CHECK(plan.local_addr[2] == 2);  // crit 1
}

TEST_CASE("layout: equal criticality breaks ties by ascending node id") {
  auto g = make_graph({Opcode::IN, Opcode::IN}, {}, {{0, 1.f}, {1, 1.f}});
  CriticalityLabels labels = {4, 4};
  std::vector<PeCoord> placement(2, PeCoord{0, 0});
  LayoutPlan plan = assign_local_addresses(g, labels, placement, 1, 1);
  CHECK(plan.local_addr[0] == 0);
  CHECK(plan.local_addr[1] == 1);
}

TEST_CASE("layout: 5000 nodes on one PE exceed the 4096 flag-addressable slots") {
  GenParams p;
  p.n_nodes = 5000;
  p.n_layers = 10;
  p.seed = 2;
  DataflowGraph g = generate_layered_dag(p);
  auto crit = compute_criticality(g);
  std::vector<PeCoord> placement(5000, PeCoord{0, 0});
  try {
    assign_local_addresses(g, crit, placement, 1, 1);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    std::string msg = e.what();
    CHECK(msg.find("4096") != std::string::npos);
    CHECK(msg.find("(0,0)") != std::string::npos);
  }
}

TEST_CASE("geometry: flag word arithmetic at defaults") {
  BramGeometry geom;
  CHECK(geom.flag_words_per_bram() == 32);  // 2 * ceil(512/32)
  CHECK(geom.flag_words_per_pe() == 256);   // 8 BRAMs
  CHECK(geom.pending_words_per_pe() == 128);
  CHECK(geom.flag_capacity_per_pe() == 4096);
  CHECK(geom.overhead_fraction() == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("capacity: out-of-order defaults") {
  CapacityReport r = capacity_model(BramGeometry{}, SchedulerKind::OooLod);
  CHECK(r.flag_overhead_words_per_pe == 256);
  CHECK(r.usable_words_per_pe == 3840);  // 8*512 - 256
  CHECK(r.overhead_fraction == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("capacity: 256 PEs give 983040 usable words out-of-order") {
  CapacityReport r = capacity_model(BramGeometry{}, SchedulerKind::OooLod, FifoPolicy{}, 256);
  CHECK(static_cast<uint64_t>(r.usable_words_per_pe) * 256 == 983040u);
}

TEST_CASE("capacity: in-order worst-case FIFO carve-out fixed point") {
  CapacityReport r = capacity_model(BramGeometry{}, SchedulerKind::InOrderFifo);
  // f=4 is the smallest whole-BRAM split with f*512 >= (8-f)*512
  CHECK(r.fifo_brams_per_pe == 4);
  CHECK(r.fifo_depth == 2048);
  CHECK(r.usable_words_per_pe == 2048);
}

TEST_CASE("capacity: out-of-order beats in-order by at least 1.5x at defaults") {
  CapacityReport ooo = capacity_model(BramGeometry{}, SchedulerKind::OooLod);
  CapacityReport io = capacity_model(BramGeometry{}, SchedulerKind::InOrderFifo);
  double ratio = static_cast<double>(ooo.usable_words_per_pe) / io.usable_words_per_pe;
  CHECK(ratio >= 1.5);
  CHECK(ratio == doctest::Approx(1.875));
}

TEST_CASE("capacity: comparison report documents parameters for a 5x ratio") {
  std::string rep = capacity_comparison_report(BramGeometry{}, FifoPolicy{}, 256);
  CHECK(rep.find("capacity_ratio_ooo_over_in_order: 1.875") != std::string::npos);
  CHECK(rep.find("5.0x") != std::string::npos);
  CHECK(rep.find("fifo_brams=7 -> ratio 7.5") != std::string::npos);
}

TEST_CASE("plan capacity check names the PE and shortfall") {
  GenParams p;
  p.n_nodes = 3000;
  p.n_layers = 8;
  p.seed = 4;
  DataflowGraph g = generate_layered_dag(p);
  auto crit = compute_criticality(g);
  std::vector<PeCoord> placement(3000, PeCoord{0, 0});
  LayoutPlan plan = assign_local_addresses(g, crit, placement, 1, 1);
  CapacityReport cap = capacity_model(BramGeometry{}, SchedulerKind::OooLod, FifoPolicy{}, 1);
  try {
    check_plan_capacity(plan, cap);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    std::string msg = e.what();
    CHECK(msg.find("short by") != std::string::npos);
  }
}

TEST_SUITE_END();
