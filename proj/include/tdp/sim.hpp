#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tdp/graph.hpp"
#include "tdp/noc.hpp"
#include "tdp/pe.hpp"
#include "tdp/schedule.hpp"

namespace tdp {

struct SimConfig {
  uint32_t grid_w = 16;
  uint32_t grid_h = 16;
  SchedulerKind scheduler = SchedulerKind::OooLod;
  uint32_t lat_add = 1;
  uint32_t lat_sub = 1;
  uint32_t lat_mul = 1;
  uint32_t lat_div = 8;
  uint32_t mem_ports = 4;
  uint32_t fifo_depth = 0;  // 0 = worst case (all local nodes)
  FifoPolicy fifo_policy;
  BramGeometry geometry;
  uint32_t watchdog_factor = 50;
  PlacePolicy placement = PlacePolicy::RoundRobinTopo;
  bool paper_strict = false;
  bool check_invariants = true;
  bool trace_events = false;
  bool trace_flits = false;
  uint32_t threads = 1;  // >1 steps the per-PE and per-router loops with OpenMP
  uint64_t seed = 0;

  uint32_t n_pes() const { return grid_w * grid_h; }
  uint32_t latency_of(Opcode op) const;
  // grid must fit the 56-bit flit budget, watchdog factor >= 1
  void validate() const;
};

struct SimStats {
  uint64_t cycles = 0;
  uint64_t injected = 0;
  uint64_t delivered = 0;
  uint64_t deflections = 0;
  uint64_t loopbacks = 0;
  uint64_t sched_passes = 0;
  uint64_t nodes_fired = 0;
  uint64_t writebacks = 0;
  uint64_t net_stall_cycles = 0;
  uint64_t port_stall_cycles = 0;
  uint32_t peak_fifo = 0;
  uint32_t max_ports_used = 0;
  uint64_t pass_timing_violations = 0;
  uint64_t argmax_violations = 0;
  uint64_t coherence_violations = 0;
  double util_mean = 0.0;
  std::vector<uint64_t> pe_busy_cycles;
  std::string status = "ok";

  bool operator==(const SimStats&) const = default;
  std::string to_report() const;
};

struct RunResult {
  SimStats stats;
  std::vector<float> values;  // node id -> final value
};

// Synchronous cycle loop over the PEs and the torus. Each cycle:
//   (1) network routes and delivers ejections
//   (2) PEs accept/fire   (3) ALUs advance
//   (4) schedulers progress   (5) streamers inject
// Two-phase updates keep the result independent of PE iteration order, so the
// per-PE and per-router loops run serially or under OpenMP with identical
// results. Runs until every node is DONE and the network has drained; a
// watchdog turns livelock into a diagnosable error.
class Engine {
 public:
  Engine(const DataflowGraph& g, const LayoutPlan& plan, const SimConfig& cfg);
  ~Engine();

  RunResult run();

  const std::vector<PeEventRow>& event_trace() const { return event_rows_; }
  const std::vector<FlitTraceRow>& flit_trace() const { return flit_rows_; }

 private:
  void build_pes();
  void step_cycle(uint64_t cycle);
  uint64_t watchdog_limit() const;
  std::string freeze_report(uint64_t cycle) const;

  const DataflowGraph& graph_;
  const LayoutPlan& plan_;
  SimConfig cfg_;
  Network net_;
  std::vector<std::unique_ptr<Pe>> pes_;
  std::vector<uint8_t> ejection_ready_;
  std::vector<std::vector<PeEventRow>> event_scratch_;
  std::vector<PeEventRow> event_rows_;
  std::vector<FlitTraceRow> flit_rows_;
  uint64_t total_fanouts_ = 0;
};

RunResult run_simulation(const DataflowGraph& g, const LayoutPlan& plan, const SimConfig& cfg);

// convenience: criticality + placement + addressing + capacity gate + run
RunResult prepare_and_run(const DataflowGraph& g, const SimConfig& cfg);

// base cycles / other cycles; > 1 means `other` is faster
double speedup(const SimStats& base, const SimStats& other);

std::string event_trace_csv(const std::vector<PeEventRow>& rows);
std::string flit_trace_csv(const std::vector<FlitTraceRow>& rows);

}  // namespace tdp
