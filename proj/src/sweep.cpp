#include "tdp/sweep.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tdp/config.hpp"
#include "tdp/errors.hpp"
#include "tdp/schedule.hpp"

namespace tdp {

const char* kSweepCsvHeader =
    "workload,nodes,edges,grid_w,grid_h,scheduler,seed,cycles,injected,delivered,deflections,"
    "loopbacks,sched_passes,peak_fifo,util_mean,status";

namespace {

std::string_view trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t c = s.find(sep, pos);
    if (c == std::string_view::npos) {
      out.emplace_back(trim(s.substr(pos)));
      break;
    }
    out.emplace_back(trim(s.substr(pos, c - pos)));
    pos = c + 1;
  }
  return out;
}

}  // namespace

WorkloadSpec parse_workload_token(const std::string& token) {
  WorkloadSpec w;
  w.token = token;
  if (token.rfind("gen:", 0) != 0) {
    w.is_gen = false;
    w.path = token;
    return w;
  }
  w.is_gen = true;
  for (const std::string& kv : split(std::string_view(token).substr(4), ',')) {
    if (kv.empty()) continue;
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ParseError(token, 0, "generator spec: expected key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    std::string val = kv.substr(eq + 1);
    auto parse_u = [&](uint64_t& out) {
      auto res = std::from_chars(val.data(), val.data() + val.size(), out);
      if (res.ec != std::errc() || res.ptr != val.data() + val.size())
        throw ParseError(token, 0, "generator spec: bad integer '" + val + "'");
    };
    if (key == "n") {
      uint64_t v;
      parse_u(v);
      w.gen.n_nodes = static_cast<uint32_t>(v);
    } else if (key == "layers") {
      uint64_t v;
      parse_u(v);
      w.gen.n_layers = static_cast<uint32_t>(v);
    } else if (key == "fanout") {
      double v = 0.0;
      auto res = std::from_chars(val.data(), val.data() + val.size(), v);
      if (res.ec != std::errc() || res.ptr != val.data() + val.size())
        throw ParseError(token, 0, "generator spec: bad float '" + val + "'");
      w.gen.mean_fanout = v;
    } else if (key == "seed") {
      uint64_t v;
      parse_u(v);
      w.gen.seed = v;
    } else {
      throw ParseError(token, 0, "generator spec: unknown key '" + key + "'");
    }
  }
  return w;
}

SweepSpec parse_sweep_spec(std::string_view text, const std::string& filename) {
  SweepSpec spec;
  bool seeds_given = false;
  uint64_t lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view lineraw =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++lineno;

    std::string_view lv = lineraw;
    if (size_t h = lv.find('#'); h != std::string_view::npos) lv = lv.substr(0, h);
    lv = trim(lv);
    if (lv.empty()) continue;
    size_t eq = lv.find('=');
    if (eq == std::string_view::npos) throw ParseError(filename, lineno, "expected 'key = value'");
    std::string key(trim(lv.substr(0, eq)));
    std::string value(trim(lv.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ParseError(filename, lineno, "expected 'key = value'");

    if (key == "workload") {
      spec.workloads.push_back(parse_workload_token(value));
    } else if (key == "grid") {
      size_t x = value.find('x');
      uint32_t gw = 0, gh = 0;
      bool ok = x != std::string::npos;
      if (ok) {
        auto r1 = std::from_chars(value.data(), value.data() + x, gw);
        auto r2 = std::from_chars(value.data() + x + 1, value.data() + value.size(), gh);
        ok = r1.ec == std::errc() && r2.ec == std::errc() && gw >= 1 && gh >= 1;
      }
      if (!ok) throw ParseError(filename, lineno, "grid: expected WxH, got '" + value + "'");
      spec.grids.emplace_back(gw, gh);
    } else if (key == "scheduler") {
      if (value == "in_order") spec.schedulers.push_back(SchedulerKind::InOrderFifo);
      else if (value == "ooo") spec.schedulers.push_back(SchedulerKind::OooLod);
      else if (value == "both") {
        spec.schedulers.push_back(SchedulerKind::InOrderFifo);
        spec.schedulers.push_back(SchedulerKind::OooLod);
      } else throw ParseError(filename, lineno, "scheduler: expected in_order|ooo|both");
    } else if (key == "seeds") {
      spec.seeds.clear();
      seeds_given = true;
      for (const std::string& tok : split(value, ',')) {
        if (tok.empty()) continue;
        uint64_t v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
          throw ParseError(filename, lineno, "seeds: bad integer '" + tok + "'");
        spec.seeds.push_back(v);
      }
      if (spec.seeds.empty()) throw ParseError(filename, lineno, "seeds: empty list");
    } else if (key == "out") {
      spec.out_path = value;
    } else if (key == "jobs") {
      uint64_t v = 0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size() || v < 1)
        throw ParseError(filename, lineno, "jobs: expected positive integer");
      spec.jobs = static_cast<uint32_t>(v);
    } else if (apply_config_key(spec.base, key, value, filename, lineno)) {
      // simulation key applied to every run
    } else {
      throw ParseError(filename, lineno, "unknown key '" + key + "'");
    }
  }
  if (spec.workloads.empty()) throw ParseError(filename, lineno, "sweep needs >= 1 workload");
  if (spec.grids.empty()) spec.grids.emplace_back(spec.base.grid_w, spec.base.grid_h);
  if (spec.schedulers.empty())
    spec.schedulers = {SchedulerKind::InOrderFifo, SchedulerKind::OooLod};
  (void)seeds_given;
  return spec;
}

SweepSpec load_sweep_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sweep_spec(ss.str(), path);
}

namespace {

struct Job {
  uint32_t w_idx, g_idx, s_idx, seed_idx;
  size_t row;
};

std::string run_failure_status(const std::exception& e) {
  (void)e;
  return "error";
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  SweepResult result;
  const size_t n_rows =
      spec.workloads.size() * spec.grids.size() * spec.schedulers.size() * spec.seeds.size();
  result.rows.resize(n_rows);

  // row order is the spec order regardless of execution order
  auto row_index = [&](uint32_t w, uint32_t g, uint32_t s, uint32_t seed) {
    return ((static_cast<size_t>(w) * spec.grids.size() + g) * spec.schedulers.size() + s) *
               spec.seeds.size() +
           seed;
  };

  // graphs grouped per (workload, seed) so memory stays bounded while the
  // (grid, scheduler) runs inside a group can execute concurrently
  for (uint32_t w = 0; w < spec.workloads.size(); ++w) {
    const WorkloadSpec& wl = spec.workloads[w];
    for (uint32_t sd = 0; sd < spec.seeds.size(); ++sd) {
      DataflowGraph graph;
      std::string group_status = "ok";
      try {
        if (wl.is_gen) {
          GenParams gp = wl.gen;
          gp.seed = gp.seed + spec.seeds[sd];
          gp.paper_strict = spec.base.paper_strict;
          graph = generate_layered_dag(gp);
        } else {
          graph = load_graph_file(wl.path);
        }
        ValidationReport rep = validate_graph(graph, spec.base.paper_strict);
        if (!rep.ok()) group_status = "validation_error";
      } catch (const ParseError&) {
        group_status = "parse_error";
      } catch (const std::invalid_argument&) {
        group_status = "generator_error";
      }

      CriticalityLabels crit;
      if (group_status == "ok") crit = compute_criticality(graph);

      struct GridPlan {
        bool ok = false;
        std::string status;
        LayoutPlan plan;
      };
      std::vector<GridPlan> plans(spec.grids.size());
      for (uint32_t g = 0; g < spec.grids.size(); ++g) {
        if (group_status != "ok") {
          plans[g].status = group_status;
          continue;
        }
        try {
          auto [gw, gh] = spec.grids[g];
          auto placement = place_nodes(graph, gw, gh, spec.base.placement);
          plans[g].plan =
              assign_local_addresses(graph, crit, placement, gw, gh, spec.base.geometry);
          plans[g].ok = true;
          plans[g].status = "ok";
        } catch (const CapacityError&) {
          plans[g].status = "capacity_error";
        }
      }

      std::vector<Job> jobs;
      for (uint32_t g = 0; g < spec.grids.size(); ++g)
        for (uint32_t s = 0; s < spec.schedulers.size(); ++s)
          jobs.push_back({w, g, s, sd, row_index(w, g, s, sd)});

      auto run_job = [&](const Job& job) {
        SweepRow& row = result.rows[job.row];
        row.workload = wl.token;
        row.grid_w = spec.grids[job.g_idx].first;
        row.grid_h = spec.grids[job.g_idx].second;
        row.scheduler = spec.schedulers[job.s_idx];
        row.seed = spec.seeds[job.seed_idx];
        if (group_status != "ok") {
          row.status = group_status;
          return;
        }
        row.nodes = graph.node_count();
        row.edges = graph.edge_count();
        const GridPlan& gp = plans[job.g_idx];
        if (!gp.ok) {
          row.status = gp.status;
          return;
        }
        SimConfig cfg = spec.base;
        cfg.grid_w = row.grid_w;
        cfg.grid_h = row.grid_h;
        cfg.scheduler = row.scheduler;
        cfg.seed = row.seed;
        cfg.threads = 1;  // per-run parallelism off; the sweep parallelizes across runs
        cfg.trace_events = cfg.trace_flits = false;
        try {
          cfg.validate();
          CapacityReport cap =
              capacity_model(cfg.geometry, cfg.scheduler, cfg.fifo_policy, cfg.n_pes());
          check_plan_capacity(gp.plan, cap);
          RunResult rr = run_simulation(graph, gp.plan, cfg);
          row.stats = rr.stats;
          row.status = "ok";
        } catch (const CapacityError&) {
          row.status = "capacity_error";
        } catch (const WatchdogError&) {
          row.status = "watchdog";
        } catch (const FifoOverflowError&) {
          row.status = "fifo_overflow";
        } catch (const ValidationError&) {
          row.status = "validation_error";
        } catch (const std::exception& e) {
          row.status = run_failure_status(e);
        }
      };

#ifdef _OPENMP
      if (spec.jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(spec.jobs)
        for (int64_t j = 0; j < static_cast<int64_t>(jobs.size()); ++j) run_job(jobs[j]);
      } else
#endif
      {
        for (const Job& job : jobs) run_job(job);
      }
    }
  }

  // speedup summary per (workload, grid): geometric mean over seeds of
  // in-order cycles / out-of-order cycles
  bool have_io = false, have_ooo = false;
  uint32_t io_idx = 0, ooo_idx = 0;
  for (uint32_t s = 0; s < spec.schedulers.size(); ++s) {
    if (spec.schedulers[s] == SchedulerKind::InOrderFifo && !have_io) {
      have_io = true;
      io_idx = s;
    }
    if (spec.schedulers[s] == SchedulerKind::OooLod && !have_ooo) {
      have_ooo = true;
      ooo_idx = s;
    }
  }
  if (have_io && have_ooo) {
    for (uint32_t w = 0; w < spec.workloads.size(); ++w) {
      for (uint32_t g = 0; g < spec.grids.size(); ++g) {
        double log_sum = 0.0;
        uint32_t n = 0;
        for (uint32_t sd = 0; sd < spec.seeds.size(); ++sd) {
          const SweepRow& a = result.rows[row_index(w, g, io_idx, sd)];
          const SweepRow& b = result.rows[row_index(w, g, ooo_idx, sd)];
          if (a.status != "ok" || b.status != "ok" || b.stats.cycles == 0) continue;
          log_sum += std::log(static_cast<double>(a.stats.cycles) /
                              static_cast<double>(b.stats.cycles));
          ++n;
        }
        if (n > 0) {
          SpeedupSummary sum;
          sum.workload = spec.workloads[w].token;
          sum.grid_w = spec.grids[g].first;
          sum.grid_h = spec.grids[g].second;
          sum.geomean = std::exp(log_sum / n);
          sum.n_seeds = n;
          result.speedups.push_back(sum);
        }
      }
    }
  }
  return result;
}

namespace {

// RFC-4180 quoting for fields that embed commas (generator workload tokens)
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

}  // namespace

std::string sweep_csv(const SweepResult& r) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  char buf[64];
  for (const SweepRow& row : r.rows) {
    out += csv_field(row.workload);
    out += ',';
    out += std::to_string(row.nodes);
    out += ',';
    out += std::to_string(row.edges);
    out += ',';
    out += std::to_string(row.grid_w);
    out += ',';
    out += std::to_string(row.grid_h);
    out += ',';
    out += scheduler_name(row.scheduler);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += std::to_string(row.stats.cycles);
    out += ',';
    out += std::to_string(row.stats.injected);
    out += ',';
    out += std::to_string(row.stats.delivered);
    out += ',';
    out += std::to_string(row.stats.deflections);
    out += ',';
    out += std::to_string(row.stats.loopbacks);
    out += ',';
    out += std::to_string(row.stats.sched_passes);
    out += ',';
    out += std::to_string(row.stats.peak_fifo);
    out += ',';
    snprintf(buf, sizeof(buf), "%.6f", row.stats.util_mean);
    out += buf;
    out += ',';
    out += row.status;
    out += '\n';
  }
  for (const SpeedupSummary& s : r.speedups) {
    snprintf(buf, sizeof(buf), "%.4f", s.geomean);
    out += "# speedup,";
    out += csv_field(s.workload);
    out += ',';
    out += std::to_string(s.grid_w);
    out += 'x';
    out += std::to_string(s.grid_h);
    out += ',';
    out += buf;
    out += ",seeds=";
    out += std::to_string(s.n_seeds);
    out += '\n';
  }
  return out;
}

}  // namespace tdp
