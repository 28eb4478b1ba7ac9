#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdp/graph.hpp"
#include "tdp/sim.hpp"

namespace tdp {

struct WorkloadSpec {
  std::string token;  // verbatim spec token, becomes the CSV workload column
  bool is_gen = false;
  GenParams gen;
  std::string path;  // graph file when !is_gen
};

// `gen:n=30000,layers=60,fanout=2.0,seed=7` or a graph file path
WorkloadSpec parse_workload_token(const std::string& token);

struct SweepSpec {
  std::vector<WorkloadSpec> workloads;
  std::vector<std::pair<uint32_t, uint32_t>> grids;
  std::vector<SchedulerKind> schedulers;
  std::vector<uint64_t> seeds{1};
  std::string out_path;
  uint32_t jobs = 1;
  SimConfig base;  // any simulation key may appear inline in the spec
};

SweepSpec parse_sweep_spec(std::string_view text, const std::string& filename = "<sweep>");
SweepSpec load_sweep_spec_file(const std::string& path);

struct SweepRow {
  std::string workload;
  uint64_t nodes = 0, edges = 0;
  uint32_t grid_w = 0, grid_h = 0;
  SchedulerKind scheduler = SchedulerKind::OooLod;
  uint64_t seed = 0;
  SimStats stats;
  std::string status = "ok";
};

struct SpeedupSummary {
  std::string workload;
  uint32_t grid_w = 0, grid_h = 0;
  double geomean = 0.0;  // in_order cycles / ooo cycles, geometric mean over seeds
  uint32_t n_seeds = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;         // spec order: workload x grid x scheduler x seed
  std::vector<SpeedupSummary> speedups;
};

// Failures of individual runs land in their row's status; the sweep keeps
// going. Generated workloads derive their graph seed as gen.seed + sweep seed.
SweepResult run_sweep(const SweepSpec& spec);

extern const char* kSweepCsvHeader;
std::string sweep_csv(const SweepResult& r);

}  // namespace tdp
