#include "tdp/schedule.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>

#include "tdp/errors.hpp"

namespace tdp {

const char* scheduler_name(SchedulerKind k) {
  return k == SchedulerKind::InOrderFifo ? "in_order" : "ooo";
}

CriticalityLabels compute_criticality(const DataflowGraph& g) {
  const size_t n = g.nodes.size();
  CriticalityLabels crit(n, 0);

  // reverse-topological DP: crit(v) = max over fanouts of crit(dst) + 1
  std::vector<uint32_t> pending_fanouts(n, 0);
  for (size_t i = 0; i < n; ++i)
    pending_fanouts[i] = static_cast<uint32_t>(g.nodes[i].fanout.size());

  // reverse adjacency
  std::vector<uint32_t> rev_off(n + 1, 0);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout) rev_off[f.dst + 1]++;
  for (size_t i = 0; i < n; ++i) rev_off[i + 1] += rev_off[i];
  std::vector<uint32_t> rev(rev_off[n]);
  {
    std::vector<uint32_t> cur(rev_off.begin(), rev_off.end() - 1);
    for (const Node& u : g.nodes)
      for (const FanoutEntry& f : u.fanout) rev[cur[f.dst]++] = u.id;
  }

  std::queue<uint32_t> q;
  for (size_t i = 0; i < n; ++i)
    if (pending_fanouts[i] == 0) q.push(static_cast<uint32_t>(i));  // sinks
  size_t visited = 0;
  while (!q.empty()) {
    uint32_t v = q.front();
    q.pop();
    ++visited;
    for (uint32_t i = rev_off[v]; i < rev_off[v + 1]; ++i) {
      uint32_t u = rev[i];
      crit[u] = std::max(crit[u], crit[v] + 1);
      if (--pending_fanouts[u] == 0) q.push(u);
    }
  }
  if (visited != n) throw ValidationError("compute_criticality: cycle detected");
  return crit;
}

std::vector<PeCoord> place_nodes(const DataflowGraph& g, uint32_t grid_w, uint32_t grid_h,
                                 PlacePolicy policy) {
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("place_nodes: grid must be >= 1x1");
  const size_t n = g.nodes.size();
  const uint32_t n_pes = grid_w * grid_h;
  std::vector<PeCoord> placement(n);

  auto coord_of = [&](uint32_t pe) {
    return PeCoord{static_cast<uint16_t>(pe % grid_w), static_cast<uint16_t>(pe / grid_w)};
  };

  if (policy == PlacePolicy::Hash) {
    for (size_t i = 0; i < n; ++i)
      placement[i] = coord_of(static_cast<uint32_t>(splitmix64(i) % n_pes));
    return placement;
  }

  // canonical topological order: Kahn with a min-id heap, dealt cyclically
  std::vector<uint32_t> indeg(n, 0);
  for (const Node& u : g.nodes)
    for (const FanoutEntry& f : u.fanout) indeg[f.dst]++;
  std::priority_queue<uint32_t, std::vector<uint32_t>, std::greater<>> ready;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(static_cast<uint32_t>(i));
  uint32_t next_pe = 0;
  size_t dealt = 0;
  while (!ready.empty()) {
    uint32_t u = ready.top();
    ready.pop();
    placement[u] = coord_of(next_pe);
    next_pe = (next_pe + 1) % n_pes;
    ++dealt;
    for (const FanoutEntry& f : g.nodes[u].fanout)
      if (--indeg[f.dst] == 0) ready.push(f.dst);
  }
  if (dealt != n) throw ValidationError("place_nodes: cycle detected");
  return placement;
}

LayoutPlan assign_local_addresses(const DataflowGraph& g, const CriticalityLabels& labels,
                                  const std::vector<PeCoord>& placement, uint32_t grid_w,
                                  uint32_t grid_h, const BramGeometry& geom) {
  if (!geom.valid()) throw std::invalid_argument("assign_local_addresses: bad geometry");
  const size_t n = g.nodes.size();
  if (labels.size() != n || placement.size() != n)
    throw std::invalid_argument("assign_local_addresses: inconsistent inputs");

  LayoutPlan plan;
  plan.grid_w = grid_w;
  plan.grid_h = grid_h;
  plan.placement = placement;
  plan.local_addr.assign(n, 0);
  plan.pe_nodes.assign(plan.n_pes(), {});
  plan.pe_word_usage.assign(plan.n_pes(), 0);
  plan.overhead_fraction = geom.overhead_fraction();

  for (size_t i = 0; i < n; ++i) plan.pe_nodes[plan.pe_index(placement[i])].push_back(g.nodes[i].id);

  const uint32_t cap = geom.flag_capacity_per_pe();
  for (uint32_t pe = 0; pe < plan.n_pes(); ++pe) {
    auto& ids = plan.pe_nodes[pe];
    std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
      if (labels[a] != labels[b]) return labels[a] > labels[b];
      return a < b;
    });
    if (ids.size() > cap)
      throw CapacityError("PE (" + std::to_string(pe % grid_w) + "," + std::to_string(pe / grid_w) +
                          "): " + std::to_string(ids.size()) + " nodes exceed " +
                          std::to_string(cap) + " flag-addressable slots by " +
                          std::to_string(ids.size() - cap));
    for (uint32_t a = 0; a < ids.size(); ++a) {
      plan.local_addr[ids[a]] = a;
      plan.pe_word_usage[pe] += 2 + g.nodes[ids[a]].fanout.size();
    }
  }
  return plan;
}

std::string LayoutPlan::to_report() const {
  std::ostringstream os;
  os << "grid: " << grid_w << "x" << grid_h << "\n";
  os << "nodes: " << placement.size() << "\n";
  uint64_t max_words = 0, max_nodes = 0;
  for (uint32_t pe = 0; pe < n_pes(); ++pe) {
    max_words = std::max(max_words, pe_word_usage[pe]);
    max_nodes = std::max<uint64_t>(max_nodes, pe_nodes[pe].size());
  }
  os << "max_nodes_per_pe: " << max_nodes << "\n";
  os << "max_words_per_pe: " << max_words << "\n";
  os << "flag_overhead_fraction: " << overhead_fraction << "\n";
  return os.str();
}

CapacityReport capacity_model(const BramGeometry& geom, SchedulerKind kind,
                              const FifoPolicy& fifo, uint32_t n_pes) {
  if (!geom.valid()) throw std::invalid_argument("capacity_model: bad geometry");
  CapacityReport r;
  r.kind = kind;
  r.n_pes = n_pes;
  const uint32_t total = geom.total_words_per_pe();

  if (kind == SchedulerKind::OooLod) {
    r.flag_overhead_words_per_pe = geom.flag_words_per_pe();
    r.usable_words_per_pe = total - std::min(total, r.flag_overhead_words_per_pe);
    r.overhead_fraction = geom.overhead_fraction();
  } else {
    // smallest whole-BRAM carve-out covering the worst case (every word of
    // remaining graph memory holding a simultaneously-ready node)
    uint32_t f = geom.brams_per_pe;
    for (uint32_t k = 0; k <= geom.brams_per_pe; ++k) {
      uint64_t entries = static_cast<uint64_t>(k) * fifo.entries_per_bram;
      uint64_t worst = static_cast<uint64_t>(geom.brams_per_pe - k) * geom.words_per_bram;
      if (entries >= worst) {
        f = k;
        break;
      }
    }
    r.fifo_brams_per_pe = f;
    r.fifo_depth = f * fifo.entries_per_bram;
    r.usable_words_per_pe = (geom.brams_per_pe - f) * geom.words_per_bram;
    r.overhead_fraction = static_cast<double>(f) / geom.brams_per_pe;
  }

  // 2 fixed words per node (header + operand buffer) + 1 word per fanout
  // entry; quoting max units assumes fanout entries ~= nodes, i.e. 3 words
  // per 2 units
  r.max_units_per_pe = (static_cast<uint64_t>(r.usable_words_per_pe) * 2) / 3;
  r.max_units_overlay = r.max_units_per_pe * n_pes;
  return r;
}

std::string CapacityReport::to_report() const {
  std::ostringstream os;
  os << "scheduler: " << scheduler_name(kind) << "\n";
  os << "usable_words_per_pe: " << usable_words_per_pe << "\n";
  os << "flag_overhead_words_per_pe: " << flag_overhead_words_per_pe << "\n";
  os << "fifo_brams_per_pe: " << fifo_brams_per_pe << "\n";
  os << "fifo_depth_entries: " << fifo_depth << "\n";
  os << "overhead_fraction: " << overhead_fraction << "\n";
  os << "max_units_per_pe: " << max_units_per_pe << "\n";
  os << "max_units_overlay_" << n_pes << "pe: " << max_units_overlay << "\n";
  return os.str();
}

void check_plan_capacity(const LayoutPlan& plan, const CapacityReport& cap) {
  for (uint32_t pe = 0; pe < plan.n_pes(); ++pe) {
    if (plan.pe_word_usage[pe] > cap.usable_words_per_pe)
      throw CapacityError("PE (" + std::to_string(pe % plan.grid_w) + "," +
                          std::to_string(pe / plan.grid_w) + "): graph needs " +
                          std::to_string(plan.pe_word_usage[pe]) + " words, " +
                          scheduler_name(cap.kind) + " usable is " +
                          std::to_string(cap.usable_words_per_pe) + " (short by " +
                          std::to_string(plan.pe_word_usage[pe] - cap.usable_words_per_pe) + ")");
  }
}

std::string capacity_comparison_report(const BramGeometry& geom, const FifoPolicy& fifo,
                                       uint32_t n_pes) {
  CapacityReport ooo = capacity_model(geom, SchedulerKind::OooLod, fifo, n_pes);
  CapacityReport io = capacity_model(geom, SchedulerKind::InOrderFifo, fifo, n_pes);
  std::ostringstream os;
  os << "# out-of-order\n" << ooo.to_report();
  os << "# in-order\n" << io.to_report();
  double ratio = io.usable_words_per_pe > 0
                     ? static_cast<double>(ooo.usable_words_per_pe) / io.usable_words_per_pe
                     : std::numeric_limits<double>::infinity();
  os << "# comparison\n";
  os << "capacity_ratio_ooo_over_in_order: " << ratio << "\n";

  // what the FIFO carve-out would have to cost for a ~5x ratio
  const uint32_t B = geom.brams_per_pe;
  const uint32_t W = geom.words_per_bram;
  const uint32_t ooo_usable = ooo.usable_words_per_pe;
  double needed_io_words = ooo_usable / 5.0;
  double needed_brams = B - needed_io_words / W;
  os << "note: a 5.0x ratio needs the in-order carve-out to cost ~" << needed_brams << " of " << B
     << " BRAMs (" << needed_io_words
     << " usable words); whole-BRAM splits reaching >= 2x under the worst-case rule:\n";
  for (uint32_t f = 1; f < B; ++f) {
    uint32_t usable = (B - f) * W;
    double r = static_cast<double>(ooo_usable) / usable;
    if (r < 2.0) continue;
    // entries_per_bram range for which the worst-case rule picks exactly f
    uint64_t emin = ceil_div_u64(static_cast<uint64_t>(B - f) * W, f);
    os << "  fifo_brams=" << f << " -> ratio " << r << " (entries_per_bram ";
    if (f > 1) {
      uint64_t emax = ceil_div_u64(static_cast<uint64_t>(B - f + 1) * W, f - 1) - 1;
      os << "in [" << emin << ", " << emax << "])\n";
    } else {
      os << ">= " << emin << ")\n";
    }
  }
  return os.str();
}

}  // namespace tdp
