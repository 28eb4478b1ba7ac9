#include "tdp/sim.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <exception>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tdp/errors.hpp"

namespace tdp {

uint32_t SimConfig::latency_of(Opcode op) const {
  switch (op) {
    case Opcode::ADD: return lat_add;
    case Opcode::SUB: return lat_sub;
    case Opcode::MUL: return lat_mul;
    case Opcode::DIV: return lat_div;
    case Opcode::IN: return 0;
  }
  return 1;
}

void SimConfig::validate() const {
  if (grid_w < 1 || grid_h < 1) throw ValidationError("config: grid must be >= 1x1");
  if (watchdog_factor < 1) throw ValidationError("config: watchdog_factor must be >= 1");
  if (!geometry.valid()) throw ValidationError("config: bad BRAM geometry");
  if (lat_add < 1 || lat_sub < 1 || lat_mul < 1 || lat_div < 1)
    throw ValidationError("config: ALU latencies must be >= 1");
  uint32_t bits = flit_bits(grid_w, grid_h, geometry.flag_capacity_per_pe());
  if (bits > kFlitBitBudget)
    throw ValidationError("config: flit needs " + std::to_string(bits) + " bits, budget is " +
                          std::to_string(kFlitBitBudget));
}

std::string SimStats::to_report() const {
  std::ostringstream os;
  os << "status: " << status << "\n";
  os << "cycles: " << cycles << "\n";
  os << "injected: " << injected << "\n";
  os << "delivered: " << delivered << "\n";
  os << "deflections: " << deflections << "\n";
  os << "loopbacks: " << loopbacks << "\n";
  os << "sched_passes: " << sched_passes << "\n";
  os << "nodes_fired: " << nodes_fired << "\n";
  os << "writebacks: " << writebacks << "\n";
  os << "net_stall_cycles: " << net_stall_cycles << "\n";
  os << "port_stall_cycles: " << port_stall_cycles << "\n";
  os << "peak_fifo: " << peak_fifo << "\n";
  os << "max_ports_used: " << max_ports_used << "\n";
  char buf[32];
  snprintf(buf, sizeof(buf), "%.6f", util_mean);
  os << "util_mean: " << buf << "\n";
  os << "pass_timing_violations: " << pass_timing_violations << "\n";
  os << "argmax_violations: " << argmax_violations << "\n";
  os << "coherence_violations: " << coherence_violations << "\n";
  return os.str();
}

Engine::Engine(const DataflowGraph& g, const LayoutPlan& plan, const SimConfig& cfg)
    : graph_(g), plan_(plan), cfg_(cfg), net_(static_cast<uint16_t>(cfg.grid_w),
                                             static_cast<uint16_t>(cfg.grid_h)) {
  cfg_.validate();
  if (plan_.grid_w != cfg_.grid_w || plan_.grid_h != cfg_.grid_h)
    throw ValidationError("engine: plan grid does not match config grid");
  if (plan_.placement.size() != g.nodes.size())
    throw ValidationError("engine: plan does not cover the graph");
  for (const Node& n : g.nodes) total_fanouts_ += n.fanout.size();
  build_pes();
}

Engine::~Engine() = default;

void Engine::build_pes() {
  const uint32_t n_pes = cfg_.n_pes();
  PeConfig pc;
  pc.scheduler = cfg_.scheduler;
  pc.latency[static_cast<int>(Opcode::ADD)] = cfg_.lat_add;
  pc.latency[static_cast<int>(Opcode::SUB)] = cfg_.lat_sub;
  pc.latency[static_cast<int>(Opcode::MUL)] = cfg_.lat_mul;
  pc.latency[static_cast<int>(Opcode::DIV)] = cfg_.lat_div;
  pc.mem_ports = cfg_.mem_ports;
  pc.fifo_depth = cfg_.fifo_depth;
  pc.check_invariants = cfg_.check_invariants;

  CriticalityLabels crit = compute_criticality(graph_);

  pes_.reserve(n_pes);
  for (uint32_t p = 0; p < n_pes; ++p) {
    PeCoord at{static_cast<uint16_t>(p % cfg_.grid_w), static_cast<uint16_t>(p / cfg_.grid_w)};
    pes_.push_back(std::make_unique<Pe>(at, p, pc, cfg_.geometry.pending_words_per_pe()));
  }

  // local tables in address order; fanout entries resolve placement up front
  for (uint32_t p = 0; p < n_pes; ++p) {
    for (uint32_t id : plan_.pe_nodes[p]) {
      const Node& n = graph_.nodes[id];
      Pe::LocalNode ln;
      ln.node_id = id;
      ln.opcode = n.opcode;
      ln.crit = crit[id];
      std::vector<Pe::FanoutRef> refs;
      refs.reserve(n.fanout.size());
      for (const FanoutEntry& f : n.fanout) {
        Pe::FanoutRef r;
        PeCoord dest = plan_.placement[f.dst];
        r.dest_x = dest.x;
        r.dest_y = dest.y;
        r.dest_addr = static_cast<uint16_t>(plan_.local_addr[f.dst]);
        r.slot = f.slot;
        r.local = plan_.pe_index(dest) == p;
        refs.push_back(r);
      }
      pes_[p]->add_node(ln, refs);
    }
    pes_[p]->finalize();
  }

  ejection_ready_.assign(n_pes, cfg_.mem_ports >= 1 ? 1 : 0);
  if (cfg_.trace_events) event_scratch_.resize(n_pes);
  if (cfg_.trace_flits) net_.set_trace(&flit_rows_);
}

uint64_t Engine::watchdog_limit() const {
  // generous serial-execution bound: every node pays scheduling plus its ALU
  // latency, every edge a full torus circuit
  uint64_t max_lat = std::max(std::max(cfg_.lat_add, cfg_.lat_sub),
                              std::max(cfg_.lat_mul, cfg_.lat_div));
  uint64_t per_unit = max_lat + cfg_.grid_w + cfg_.grid_h + 8;
  uint64_t units = graph_.nodes.size() + total_fanouts_ + cfg_.n_pes() + 64;
  return static_cast<uint64_t>(cfg_.watchdog_factor) * per_unit * units;
}

std::string Engine::freeze_report(uint64_t cycle) const {
  std::ostringstream os;
  uint64_t done = 0;
  for (const auto& pe : pes_) done += pe->done_count();
  os << "watchdog tripped at cycle " << cycle << ": " << done << "/" << graph_.nodes.size()
     << " nodes done, " << net_.count_flits() << " flits in flight\n";
  int shown = 0;
  for (const auto& pe : pes_) {
    if (pe->drained() && pe->done_count() == pe->local_count()) continue;
    os << "  " << pe->freeze_summary() << "\n";
    if (++shown == 8) {
      os << "  ...\n";
      break;
    }
  }
  return os.str();
}

void Engine::step_cycle(uint64_t cycle) {
  const uint32_t n_pes = cfg_.n_pes();
  net_.begin_cycle();

  // Errors raised inside a parallel region are captured per PE and rethrown
  // in index order, so parallel runs fail identically to serial ones.
  auto run_indexed = [&](auto&& body) {
#ifdef _OPENMP
    if (cfg_.threads > 1) {
      std::vector<std::exception_ptr> errs(n_pes);
#pragma omp parallel for schedule(static) num_threads(cfg_.threads)
      for (int64_t p = 0; p < static_cast<int64_t>(n_pes); ++p) {
        try {
          body(static_cast<uint32_t>(p));
        } catch (...) {
          errs[p] = std::current_exception();
        }
      }
      for (uint32_t p = 0; p < n_pes; ++p)
        if (errs[p]) std::rethrow_exception(errs[p]);
      return;
    }
#endif
    for (uint32_t p = 0; p < n_pes; ++p) body(p);
  };

  // phase 1: all routers arbitrate from the cycle-start latches
  run_indexed([&](uint32_t p) { net_.route_one(cycle, p, &ejection_ready_); });
  net_.finish_route();

  // phases 2-5 fused per PE: accept/fire, ALU, scheduler, streamer. Each PE
  // touches only its own state, its delivery slot and its own router's free
  // ports, so the loop parallelizes without changing results.
  run_indexed([&](uint32_t p) {
    Pe& pe = *pes_[p];
    pe.begin_cycle();
    pe.accept_phase(cycle, net_.take_delivery(p));
    pe.alu_phase(cycle);
    pe.scheduler_phase(cycle);
    pe.stream_phase(cycle, net_);
    pe.end_cycle(cycle);
  });

  net_.end_cycle();
  if (cfg_.trace_events) {
    for (uint32_t p = 0; p < n_pes; ++p) {
      auto& scratch = event_scratch_[p];
      event_rows_.insert(event_rows_.end(), scratch.begin(), scratch.end());
      scratch.clear();
    }
  }
}

RunResult Engine::run() {
  const uint32_t n_pes = cfg_.n_pes();
  const uint64_t n_nodes = graph_.nodes.size();

  if (cfg_.trace_events)
    for (uint32_t p = 0; p < n_pes; ++p) pes_[p]->set_event_sink(&event_scratch_[p]);

  for (uint32_t p = 0; p < n_pes; ++p) pes_[p]->preload_inputs(graph_.inputs);

  const uint64_t limit = watchdog_limit();
  uint64_t cycle = 0;
  // sampled outer-coherence audit; every cycle on small overlays
  const uint64_t audit_stride = (n_pes <= 4) ? 1 : 32;

  while (true) {
    uint64_t done = 0;
    for (uint32_t p = 0; p < n_pes; ++p) done += pes_[p]->done_count();
    if (done == n_nodes) break;
    if (cycle >= limit) throw WatchdogError(freeze_report(cycle));
    step_cycle(cycle);
    if (cfg_.check_invariants && cycle % audit_stride == 0) {
      for (uint32_t p = 0; p < n_pes; ++p)
        if (!pes_[p]->pending().outer_coherent())
          throw SimBugError("outer summary bit out of sync with PENDING word");
    }
    ++cycle;
  }

  if (!net_.empty()) throw SimBugError("engine: all nodes done but network not drained");
  for (uint32_t p = 0; p < n_pes; ++p)
    if (!pes_[p]->drained()) throw SimBugError("engine: all nodes done but PE not drained");

  RunResult out;
  SimStats& s = out.stats;
  s.cycles = cycle;
  s.injected = net_.injected();
  s.delivered = net_.delivered();
  s.deflections = net_.deflections();
  s.pe_busy_cycles.resize(n_pes);
  uint64_t busy_total = 0;
  for (uint32_t p = 0; p < n_pes; ++p) {
    const PeCounters& c = pes_[p]->counters();
    s.loopbacks += c.loopback_deliveries;
    s.sched_passes += c.sched_passes;
    s.nodes_fired += c.fires;
    s.writebacks += c.writebacks;
    s.net_stall_cycles += c.net_stall_cycles;
    s.port_stall_cycles += c.port_stall_cycles;
    s.peak_fifo = std::max(s.peak_fifo, c.peak_fifo);
    s.max_ports_used = std::max(s.max_ports_used, c.max_ports_used);
    s.pass_timing_violations += c.pass_timing_violations;
    s.argmax_violations += c.argmax_violations;
    s.coherence_violations += c.coherence_violations;
    s.pe_busy_cycles[p] = c.busy_cycles;
    busy_total += c.busy_cycles;
  }
  s.util_mean = (cycle == 0) ? 0.0
                             : static_cast<double>(busy_total) /
                                   (static_cast<double>(cycle) * n_pes);

  // conservation: every fanout is exactly one delivery, network or local
  if (s.injected != s.delivered) throw SimBugError("engine: injected != delivered at drain");
  if (s.delivered + s.loopbacks != total_fanouts_)
    throw SimBugError("engine: deliveries + loopbacks != total fanout degree");
  if (s.nodes_fired != n_nodes) throw SimBugError("engine: fire count != node count");

  out.values.resize(n_nodes);
  for (uint32_t p = 0; p < n_pes; ++p) {
    const auto& ids = plan_.pe_nodes[p];
    for (uint32_t a = 0; a < ids.size(); ++a)
      out.values[ids[a]] = std::bit_cast<float>(pes_[p]->local_node(a).result_bits);
  }
  return out;
}

RunResult run_simulation(const DataflowGraph& g, const LayoutPlan& plan, const SimConfig& cfg) {
  Engine eng(g, plan, cfg);
  return eng.run();
}

RunResult prepare_and_run(const DataflowGraph& g, const SimConfig& cfg) {
  cfg.validate();
  ValidationReport rep = validate_graph(g, cfg.paper_strict);
  if (!rep.ok()) throw ValidationError(rep.to_string());
  CriticalityLabels crit = compute_criticality(g);
  auto placement = place_nodes(g, cfg.grid_w, cfg.grid_h, cfg.placement);
  LayoutPlan plan =
      assign_local_addresses(g, crit, placement, cfg.grid_w, cfg.grid_h, cfg.geometry);
  CapacityReport cap =
      capacity_model(cfg.geometry, cfg.scheduler, cfg.fifo_policy, cfg.n_pes());
  check_plan_capacity(plan, cap);
  return run_simulation(g, plan, cfg);
}

double speedup(const SimStats& base, const SimStats& other) {
  if (other.cycles == 0) return base.cycles == 0 ? 1.0 : 0.0;
  return static_cast<double>(base.cycles) / static_cast<double>(other.cycles);
}

std::string event_trace_csv(const std::vector<PeEventRow>& rows) {
  std::string out = "cycle,pe_x,pe_y,event,node\n";
  for (const auto& r : rows) {
    out += std::to_string(r.cycle);
    out += ',';
    out += std::to_string(r.x);
    out += ',';
    out += std::to_string(r.y);
    out += ',';
    out += pe_event_name(r.kind);
    out += ',';
    out += std::to_string(r.node);
    out += '\n';
  }
  return out;
}

std::string flit_trace_csv(const std::vector<FlitTraceRow>& rows) {
  std::string out = "cycle,serial,router_x,router_y,port\n";
  for (const auto& r : rows) {
    out += std::to_string(r.cycle);
    out += ',';
    out += std::to_string(r.serial);
    out += ',';
    out += std::to_string(r.x);
    out += ',';
    out += std::to_string(r.y);
    out += ',';
    out += port_name(r.port);
    out += '\n';
  }
  return out;
}

}  // namespace tdp
