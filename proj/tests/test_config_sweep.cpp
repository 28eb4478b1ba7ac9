#include <doctest.h>

#include "tdp/config.hpp"
#include "tdp/errors.hpp"
#include "tdp/sweep.hpp"

using namespace tdp;

TEST_SUITE_BEGIN("config_sweep");

TEST_CASE("config: defaults and overrides") {
  SimConfig cfg = parse_sim_config(
      "# experiment\n"
      "grid_w = 8\n"
      "grid_h = 4\n"
      "scheduler = in_order\n"
      "lat_div = 16\n"
      "fifo_depth = auto\n"
      "paper_strict = 1\n");
  CHECK(cfg.grid_w == 8);
  CHECK(cfg.grid_h == 4);
  CHECK(cfg.scheduler == SchedulerKind::InOrderFifo);
  CHECK(cfg.lat_div == 16);
  CHECK(cfg.fifo_depth == 0);
  CHECK(cfg.paper_strict);
  CHECK(cfg.lat_add == 1);     // untouched defaults
  CHECK(cfg.mem_ports == 4);
  CHECK(cfg.watchdog_factor == 50);
}

TEST_CASE("config: unknown keys are errors") {
  try {
    parse_sim_config("grid_w = 8\ngrid_width = 9\n", "cfg.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
  }
}

TEST_CASE("config: malformed values are errors") {
  CHECK_THROWS_AS(parse_sim_config("grid_w = eight\n"), ParseError);
  CHECK_THROWS_AS(parse_sim_config("scheduler = fifo\n"), ParseError);
  CHECK_THROWS_AS(parse_sim_config("grid_w 8\n"), ParseError);
}

TEST_CASE("workload token: generator spec") {
  WorkloadSpec w = parse_workload_token("gen:n=30000,layers=60,fanout=2.0,seed=7");
  CHECK(w.is_gen);
  CHECK(w.gen.n_nodes == 30000);
  CHECK(w.gen.n_layers == 60);
  CHECK(w.gen.mean_fanout == doctest::Approx(2.0));
  CHECK(w.gen.seed == 7);
  CHECK(w.token == "gen:n=30000,layers=60,fanout=2.0,seed=7");
}

TEST_CASE("workload token: plain path") {
  WorkloadSpec w = parse_workload_token("graphs/a.graph");
  CHECK(!w.is_gen);
  CHECK(w.path == "graphs/a.graph");
}

TEST_CASE("workload token: bad generator key") {
  CHECK_THROWS_AS(parse_workload_token("gen:nodes=5"), ParseError);
}

static const char* kTinySweep =
    "workload = gen:n=120,layers=6,fanout=2.0,seed=1\n"
    "workload = gen:n=200,layers=8,fanout=1.5,seed=2\n"
    "grid = 1x1\n"
    "grid = 2x2\n"
    "scheduler = both\n"
    "seeds = 1,2\n";

TEST_CASE("sweep: row counting and ordering") {
  SweepSpec spec = parse_sweep_spec(kTinySweep);
  CHECK(spec.workloads.size() == 2);
  CHECK(spec.grids.size() == 2);
  CHECK(spec.schedulers.size() == 2);
  CHECK(spec.seeds.size() == 2);
  SweepResult res = run_sweep(spec);
  CHECK(res.rows.size() == 16);
  // per (workload, grid) speedup summaries
  CHECK(res.speedups.size() == 4);
  for (const auto& row : res.rows) CHECK(row.status == "ok");
  // spec order: workload outer, then grid, then scheduler, then seed
  CHECK(res.rows[0].workload == spec.workloads[0].token);
  CHECK(res.rows[0].grid_w == 1);
  CHECK(res.rows[0].scheduler == SchedulerKind::InOrderFifo);
  CHECK(res.rows[0].seed == 1);
  CHECK(res.rows[1].seed == 2);
  CHECK(res.rows[2].scheduler == SchedulerKind::OooLod);
  CHECK(res.rows[8].workload == spec.workloads[1].token);
}

TEST_CASE("sweep: byte-identical CSV across repeated runs") {
  SweepSpec spec = parse_sweep_spec(kTinySweep);
  std::string a = sweep_csv(run_sweep(spec));
  std::string b = sweep_csv(run_sweep(spec));
  CHECK(a == b);
  CHECK(a.find(kSweepCsvHeader) == 0);
}

TEST_CASE("sweep: jobs > 1 gives the same CSV as serial execution") {
  SweepSpec spec = parse_sweep_spec(kTinySweep);
  spec.jobs = 1;
  std::string serial = sweep_csv(run_sweep(spec));
  spec.jobs = 2;
  std::string parallel = sweep_csv(run_sweep(spec));
  CHECK(serial == parallel);
}

TEST_CASE("sweep: capacity failures are recorded in-row and the sweep continues") {
  SweepSpec spec = parse_sweep_spec(
      "workload = gen:n=6000,layers=12,fanout=2.0,seed=3\n"
      "workload = gen:n=100,layers=4,fanout=2.0,seed=3\n"
      "grid = 1x1\n"
      "scheduler = ooo\n");
  SweepResult res = run_sweep(spec);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].status == "capacity_error");  // 6000 > 4096 flag slots
  CHECK(res.rows[1].status == "ok");
  std::string csv = sweep_csv(res);
  CHECK(csv.find("capacity_error") != std::string::npos);
}

TEST_CASE("sweep: csv header is the pinned schema") {
  CHECK(std::string(kSweepCsvHeader) ==
        "workload,nodes,edges,grid_w,grid_h,scheduler,seed,cycles,injected,delivered,"
        "deflections,loopbacks,sched_passes,peak_fifo,util_mean,status");
}

TEST_CASE("sweep: unknown keys are errors, config keys pass through") {
  CHECK_THROWS_AS(parse_sweep_spec("workload = gen:n=10\nbogus = 1\n"), ParseError);
  SweepSpec spec = parse_sweep_spec(
      "workload = gen:n=50,layers=2\n"
      "lat_div = 12\n"
      "scheduler = ooo\n");
  CHECK(spec.base.lat_div == 12);
}

TEST_SUITE_END();
