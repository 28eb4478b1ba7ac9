#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdp/graph.hpp"
#include "tdp/util.hpp"

namespace tdp {

// M20K-style block RAM model: 512x40b, 32 of the 40 bits used for flags so
// one BRAM needs 2*ceil(512/32) = 32 flag words (PENDING + DONE vectors).
struct BramGeometry {
  uint32_t words_per_bram = 512;
  uint32_t bits_per_word = 40;
  uint32_t flag_bits_per_word = 32;
  uint32_t brams_per_pe = 8;

  uint32_t flag_words_per_bram() const {
    return 2 * static_cast<uint32_t>(ceil_div_u64(words_per_bram, flag_bits_per_word));
  }
  uint32_t flag_words_per_pe() const { return brams_per_pe * flag_words_per_bram(); }
  // one vector's worth of words (PENDING or DONE)
  uint32_t pending_words_per_pe() const { return flag_words_per_pe() / 2; }
  // how many local nodes the flag vectors can address
  uint32_t flag_capacity_per_pe() const { return pending_words_per_pe() * flag_bits_per_word; }
  uint32_t total_words_per_pe() const { return brams_per_pe * words_per_bram; }
  double overhead_fraction() const {
    return static_cast<double>(flag_words_per_bram()) / words_per_bram;
  }
  bool valid() const {
    return words_per_bram >= 1 && flag_bits_per_word >= 1 &&
           flag_bits_per_word <= bits_per_word && brams_per_pe >= 1;
  }
};

enum class SchedulerKind : uint8_t { InOrderFifo, OooLod };
const char* scheduler_name(SchedulerKind k);

// In-order baseline FIFO sizing. Worst case ready-queue depth equals the
// graph-word capacity left after the FIFO carve-out, so the carve-out is the
// smallest whole-BRAM split that covers it: min f with f*entries >= (B-f)*W.
struct FifoPolicy {
  uint32_t entries_per_bram = 512;
};

struct PeCoord {
  uint16_t x = 0;
  uint16_t y = 0;
  bool operator==(const PeCoord&) const = default;
};

// node id -> unit-delay longest path to any sink
using CriticalityLabels = std::vector<uint32_t>;

CriticalityLabels compute_criticality(const DataflowGraph& g);

enum class PlacePolicy : uint8_t { RoundRobinTopo, Hash };

// round_robin_topo deals nodes across PEs in a canonical topological order
// (Kahn, lowest id first), so per-PE counts differ by at most one.
std::vector<PeCoord> place_nodes(const DataflowGraph& g, uint32_t grid_w, uint32_t grid_h,
                                 PlacePolicy policy = PlacePolicy::RoundRobinTopo);

struct LayoutPlan {
  uint32_t grid_w = 1;
  uint32_t grid_h = 1;
  std::vector<PeCoord> placement;             // node id -> PE
  std::vector<uint32_t> local_addr;           // node id -> address within its PE
  std::vector<std::vector<uint32_t>> pe_nodes;  // pe index -> node ids in address order
  std::vector<uint64_t> pe_word_usage;        // sum of (2 + fanout) per node
  double overhead_fraction = 0.0;

  uint32_t n_pes() const { return grid_w * grid_h; }
  uint32_t pe_index(PeCoord c) const { return c.y * grid_w + c.x; }
  std::string to_report() const;
};

// Addresses within each PE are dense 0..k-1 in decreasing criticality order
// (ties broken by ascending node id), so the lowest-address PENDING node is
// always a most-critical PENDING node. Throws CapacityError when a PE holds
// more nodes than the flag vectors can address.
LayoutPlan assign_local_addresses(const DataflowGraph& g, const CriticalityLabels& labels,
                                  const std::vector<PeCoord>& placement, uint32_t grid_w,
                                  uint32_t grid_h, const BramGeometry& geom = {});

struct CapacityReport {
  SchedulerKind kind = SchedulerKind::OooLod;
  uint32_t n_pes = 256;
  uint32_t usable_words_per_pe = 0;
  uint32_t flag_overhead_words_per_pe = 0;
  uint32_t fifo_brams_per_pe = 0;
  uint32_t fifo_depth = 0;  // entries, in-order only
  double overhead_fraction = 0.0;
  // nodes + fanout entries, under the 2-words-per-node + 1-per-entry model
  // with fanout entries ~= nodes
  uint64_t max_units_per_pe = 0;
  uint64_t max_units_overlay = 0;

  std::string to_report() const;
};

CapacityReport capacity_model(const BramGeometry& geom, SchedulerKind kind,
                              const FifoPolicy& fifo = {}, uint32_t n_pes = 256);

// per-PE word budget check for a concrete plan against a scheduler's usable
// words; throws CapacityError naming the PE and the shortfall
void check_plan_capacity(const LayoutPlan& plan, const CapacityReport& cap);

// capacity subcommand payload: both schedulers side by side plus the ratio
std::string capacity_comparison_report(const BramGeometry& geom, const FifoPolicy& fifo,
                                       uint32_t n_pes);

}  // namespace tdp
