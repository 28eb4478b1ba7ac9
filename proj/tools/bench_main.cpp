// Benchmark: serial vs OpenMP cycle stepping on the same workload. The
// two-phase update makes both paths bit-identical; this reports where the
// parallel path actually pays off.

#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tdp/graph.hpp"
#include "tdp/schedule.hpp"
#include "tdp/sim.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_timed(const tdp::DataflowGraph& g, const tdp::LayoutPlan& plan, tdp::SimConfig cfg,
                 tdp::SimStats* stats_out) {
  auto t0 = Clock::now();
  tdp::RunResult rr = tdp::run_simulation(g, plan, cfg);
  auto t1 = Clock::now();
  *stats_out = rr.stats;
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP stepping benchmark"};
  uint32_t n = 60000, layers = 80;
  double fanout = 2.5;
  uint64_t seed = 1;
  uint32_t grid = 16;
  uint32_t threads = std::max(2u, std::thread::hardware_concurrency());
  app.add_option("--n", n, "node count");
  app.add_option("--layers", layers, "layer count");
  app.add_option("--fanout", fanout, "mean fanout");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--grid", grid, "grid edge (grid x grid)");
  app.add_option("--threads", threads, "threads for the parallel path");
  CLI11_PARSE(app, argc, argv);

  tdp::GenParams gp;
  gp.n_nodes = n;
  gp.n_layers = layers;
  gp.mean_fanout = fanout;
  gp.seed = seed;
  tdp::DataflowGraph g = tdp::generate_layered_dag(gp);
  printf("workload: %u nodes, %llu edges, grid %ux%u\n", n,
         static_cast<unsigned long long>(g.edge_count()), grid, grid);

  tdp::SimConfig cfg;
  cfg.grid_w = cfg.grid_h = grid;
  cfg.check_invariants = false;  // measure the datapath, not the audit

  tdp::CriticalityLabels crit = tdp::compute_criticality(g);
  auto placement = tdp::place_nodes(g, cfg.grid_w, cfg.grid_h, cfg.placement);
  tdp::LayoutPlan plan =
      tdp::assign_local_addresses(g, crit, placement, cfg.grid_w, cfg.grid_h, cfg.geometry);

  for (tdp::SchedulerKind kind : {tdp::SchedulerKind::InOrderFifo, tdp::SchedulerKind::OooLod}) {
    cfg.scheduler = kind;
    tdp::SimStats serial_stats, parallel_stats;

    cfg.threads = 1;
    double t_serial = run_timed(g, plan, cfg, &serial_stats);
    cfg.threads = threads;
    double t_parallel = run_timed(g, plan, cfg, &parallel_stats);

    bool identical = serial_stats == parallel_stats;
    double cps_serial = serial_stats.cycles / t_serial;
    double cps_parallel = parallel_stats.cycles / t_parallel;
    printf("%-9s cycles=%-10llu serial %.3fs (%.0f cyc/s) | omp x%u %.3fs (%.0f cyc/s) | "
           "speedup %.2fx | results %s\n",
           tdp::scheduler_name(kind), static_cast<unsigned long long>(serial_stats.cycles),
           t_serial, cps_serial, threads, t_parallel, cps_parallel, t_serial / t_parallel,
           identical ? "identical" : "DIFFER");
    if (!identical) return 1;
  }
  return 0;
}
