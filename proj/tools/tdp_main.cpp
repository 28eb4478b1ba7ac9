// tdp: token-dataflow overlay simulator front end.
// Subcommands: run, sweep, capacity, gen, validate.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tdp/config.hpp"
#include "tdp/errors.hpp"
#include "tdp/graph.hpp"
#include "tdp/schedule.hpp"
#include "tdp/sim.hpp"
#include "tdp/sweep.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct RunArgs {
  std::string graph_path;
  std::string config_path;
  std::string out_path;
  std::string trace_prefix = "trace";
  bool trace = false;
  bool paper_strict = false;
};

int cmd_run(const RunArgs& a) {
  tdp::SimConfig cfg;
  if (!a.config_path.empty()) cfg = tdp::load_sim_config_file(a.config_path);
  if (a.paper_strict) cfg.paper_strict = true;
  if (a.trace) {
    cfg.trace_events = true;
    cfg.trace_flits = true;
  }
  cfg.validate();

  tdp::DataflowGraph g = tdp::load_graph_file(a.graph_path);
  tdp::ValidationReport rep = tdp::validate_graph(g, cfg.paper_strict);
  if (!rep.ok()) {
    std::cerr << "invalid graph:\n" << rep.to_string();
    return tdp::kExitValidation;
  }

  tdp::CriticalityLabels crit = tdp::compute_criticality(g);
  auto placement = tdp::place_nodes(g, cfg.grid_w, cfg.grid_h, cfg.placement);
  tdp::LayoutPlan plan =
      tdp::assign_local_addresses(g, crit, placement, cfg.grid_w, cfg.grid_h, cfg.geometry);
  tdp::CapacityReport cap =
      tdp::capacity_model(cfg.geometry, cfg.scheduler, cfg.fifo_policy, cfg.n_pes());
  tdp::check_plan_capacity(plan, cap);

  tdp::Engine engine(g, plan, cfg);
  tdp::RunResult rr = engine.run();

  std::string report;
  report += "workload: " + a.graph_path + "\n";
  report += "nodes: " + std::to_string(g.node_count()) + "\n";
  report += "edges: " + std::to_string(g.edge_count()) + "\n";
  report += "grid: " + std::to_string(cfg.grid_w) + "x" + std::to_string(cfg.grid_h) + "\n";
  report += "scheduler: " + std::string(tdp::scheduler_name(cfg.scheduler)) + "\n";
  report += rr.stats.to_report();
  std::cout << report;
  if (!a.out_path.empty()) write_file(a.out_path, report);
  if (a.trace) {
    write_file(a.trace_prefix + "_events.csv", tdp::event_trace_csv(engine.event_trace()));
    write_file(a.trace_prefix + "_flits.csv", tdp::flit_trace_csv(engine.flit_trace()));
  }
  return tdp::kExitOk;
}

int cmd_validate(const std::string& path, bool paper_strict) {
  tdp::DataflowGraph g = tdp::load_graph_file(path);
  tdp::ValidationReport rep = tdp::validate_graph(g, paper_strict);
  if (rep.ok()) {
    std::cout << "ok: " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
    return tdp::kExitOk;
  }
  std::cout << rep.to_string();
  return tdp::kExitValidation;
}

int cmd_capacity(const std::string& config_path, const std::string& out_path) {
  tdp::SimConfig cfg;
  if (!config_path.empty()) cfg = tdp::load_sim_config_file(config_path);
  cfg.validate();
  std::string report = "grid: " + std::to_string(cfg.grid_w) + "x" + std::to_string(cfg.grid_h) +
                       " (" + std::to_string(cfg.n_pes()) + " PEs)\n";
  report += tdp::capacity_comparison_report(cfg.geometry, cfg.fifo_policy, cfg.n_pes());
  std::cout << report;
  if (!out_path.empty()) write_file(out_path, report);
  return tdp::kExitOk;
}

struct GenArgs {
  uint32_t n = 1000;
  uint32_t layers = 10;
  double fanout = 2.0;
  uint64_t seed = 1;
  std::string out_path;
  bool paper_strict = false;
};

int cmd_gen(const GenArgs& a) {
  tdp::GenParams p;
  p.n_nodes = a.n;
  p.n_layers = a.layers;
  p.mean_fanout = a.fanout;
  p.seed = a.seed;
  p.paper_strict = a.paper_strict;
  tdp::DataflowGraph g = tdp::generate_layered_dag(p);
  tdp::save_graph_file(g, a.out_path);
  std::cout << "wrote " << g.node_count() << " nodes, " << g.edge_count() << " edges to "
            << a.out_path << "\n";
  return tdp::kExitOk;
}

struct SweepArgs {
  std::string spec_path;
  std::string out_path;
  uint32_t jobs = 0;  // 0 = from spec
  bool paper_strict = false;
};

int cmd_sweep(const SweepArgs& a) {
  tdp::SweepSpec spec = tdp::load_sweep_spec_file(a.spec_path);
  if (a.jobs > 0) spec.jobs = a.jobs;
  if (a.paper_strict) spec.base.paper_strict = true;
  if (!a.out_path.empty()) spec.out_path = a.out_path;
  tdp::SweepResult res = tdp::run_sweep(spec);
  std::string csv = tdp::sweep_csv(res);
  if (!spec.out_path.empty()) {
    write_file(spec.out_path, csv);
    for (const auto& s : res.speedups) {
      std::cout << "speedup " << s.workload << " " << s.grid_w << "x" << s.grid_h << ": "
                << s.geomean << " (" << s.n_seeds << " seeds)\n";
    }
    std::cout << "wrote " << res.rows.size() << " rows to " << spec.out_path << "\n";
  } else {
    std::cout << csv;
  }
  return tdp::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cycle-level simulator for a token-dataflow FPGA overlay"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "simulate one graph and print the stats report");
  run->add_option("graph", run_args.graph_path, "graph file")->required();
  run->add_option("--config", run_args.config_path, "key = value config file");
  run->add_option("--out", run_args.out_path, "also write the report here");
  run->add_flag("--trace", run_args.trace, "write per-cycle event and flit CSV traces");
  run->add_option("--trace-prefix", run_args.trace_prefix, "trace file prefix (default: trace)");
  run->add_flag("--paper-strict", run_args.paper_strict, "restrict opcodes to IN/ADD/MUL");

  std::string val_path;
  bool val_strict = false;
  auto* val = app.add_subcommand("validate", "check a graph file against the format invariants");
  val->add_option("graph", val_path, "graph file")->required();
  val->add_flag("--paper-strict", val_strict, "restrict opcodes to IN/ADD/MUL");

  std::string cap_config, cap_out;
  auto* cap = app.add_subcommand("capacity", "print the capacity model for both schedulers");
  cap->add_option("--config", cap_config, "key = value config file");
  cap->add_option("--out", cap_out, "also write the report here");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "write a generated layered DAG to a file");
  gen->add_option("--n", gen_args.n, "node count")->required();
  gen->add_option("--layers", gen_args.layers, "layer count");
  gen->add_option("--fanout", gen_args.fanout, "mean fanout");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--out", gen_args.out_path, "output path")->required();
  gen->add_flag("--paper-strict", gen_args.paper_strict, "emit only ADD/MUL operators");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "run a workload x grid x scheduler experiment");
  sweep->add_option("spec", sweep_args.spec_path, "sweep spec file")->required();
  sweep->add_option("--out", sweep_args.out_path, "CSV output path (overrides spec)");
  sweep->add_option("--jobs", sweep_args.jobs, "concurrent runs (overrides spec)");
  sweep->add_flag("--paper-strict", sweep_args.paper_strict, "restrict opcodes to IN/ADD/MUL");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*val) return cmd_validate(val_path, val_strict);
    if (*cap) return cmd_capacity(cap_config, cap_out);
    if (*gen) return cmd_gen(gen_args);
    if (*sweep) return cmd_sweep(sweep_args);
  } catch (const tdp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return tdp::kExitParse;
  } catch (const tdp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return tdp::kExitValidation;
  } catch (const tdp::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return tdp::kExitCapacity;
  } catch (const tdp::WatchdogError& e) {
    std::cerr << "watchdog: " << e.what() << "\n";
    return tdp::kExitWatchdog;
  } catch (const tdp::FifoOverflowError& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return tdp::kExitRunFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tdp::kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tdp::kExitUsage;
  }
  return tdp::kExitUsage;
}
