#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tdp/util.hpp"

namespace tdp {

// One network packet: destination PE, local node address, operand slot,
// 32-bit payload. The serial number is simulator bookkeeping, not wire bits.
struct Flit {
  uint16_t dest_x = 0;
  uint16_t dest_y = 0;
  uint16_t local_addr = 0;
  uint8_t slot = 0;
  uint32_t payload = 0;  // float bits
  uint64_t serial = 0;
};

constexpr uint32_t kFlitBitBudget = 56;

// dest_x + dest_y + local address + slot + 32b payload
constexpr uint32_t flit_bits(uint32_t grid_w, uint32_t grid_h, uint32_t addr_capacity) {
  return ceil_log2_u32(grid_w) + ceil_log2_u32(grid_h) + ceil_log2_u32(addr_capacity) + 1 + 32;
}

enum class Port : uint8_t { E = 0, S = 1, Exit = 2, None = 3 };
const char* port_name(Port p);

// X-then-Y dimension order: go E until the column matches, then S, then eject.
Port desired_port(const Flit& f, uint16_t at_x, uint16_t at_y);

struct ArbInputs {
  std::optional<Flit> n;   // from north, traveling south; always column-aligned
  std::optional<Flit> w;   // from west, traveling east
  std::optional<Flit> pe;  // injection attempt
  bool ejection_ready = true;
};

struct ArbResult {
  Port n_out = Port::None;
  Port w_out = Port::None;
  Port pe_out = Port::None;  // Port::None == injection refused
  uint32_t deflections = 0;  // flits assigned a non-desired port
};

// Deflection arbitration, priority N > W > PE. N takes its desired port (S or
// Exit; it never wants E). W takes its desired port unless taken, else
// deflects to E. The PE flit is accepted only onto its desired first port and
// only if that port is still free. Exit-bound PE flits never reach here
// (local loopback). Every present input gets exactly one distinct output.
ArbResult router_arbitrate(uint16_t x, uint16_t y, const ArbInputs& in);

struct FlitTraceRow {
  uint64_t cycle;
  uint64_t serial;
  uint16_t x, y;
  Port port;
};

// Unidirectional 2D torus of deflection routers, one per PE. E links wrap
// x -> (x+1) mod W, S links wrap y -> (y+1) mod H. Per-cycle protocol:
//   begin_cycle();          // flits latched last cycle arrive
//   route(ready);           // arbitrate every router, stage hops, eject
//   take_delivery(pe);      // at most one flit per PE
//   try_inject(pe, flit);   // streamer injections onto ports left free
//   end_cycle();
class Network {
 public:
  Network(uint16_t grid_w, uint16_t grid_h);

  uint16_t grid_w() const { return w_; }
  uint16_t grid_h() const { return h_; }
  uint32_t n_pes() const { return static_cast<uint32_t>(w_) * h_; }

  void begin_cycle();
  // ejection_ready: nullptr means every PE accepts; flits wanting Exit at a
  // not-ready PE deflect (N to S, W to E)
  void route(uint64_t cycle, const std::vector<uint8_t>* ejection_ready = nullptr);
  std::optional<Flit> take_delivery(uint32_t pe);
  bool try_inject(uint64_t cycle, uint32_t pe, const Flit& f);
  void end_cycle();  // flushes trace rows in router order

  bool empty() const;  // no flits latched or staged
  uint64_t in_flight() const;
  uint64_t count_flits() const;  // physical count across latches and staging

  uint64_t injected() const;
  uint64_t delivered() const;
  uint64_t deflections() const { return deflections_; }

  void set_trace(std::vector<FlitTraceRow>* sink) { trace_ = sink; }

  // single-threaded convenience wrapper used by tests: one full network cycle
  // with per-PE injection attempts; returns per-PE deliveries
  std::vector<std::optional<Flit>> step(uint64_t cycle,
                                        const std::vector<std::optional<Flit>>& injections,
                                        std::vector<uint8_t>* accepted = nullptr);

  // parallel-safe per-router kernel pieces used by the engine
  void route_one(uint64_t cycle, uint32_t pe, const std::vector<uint8_t>* ejection_ready);
  void finish_route();

 private:
  uint32_t idx(uint16_t x, uint16_t y) const { return static_cast<uint32_t>(y) * w_ + x; }
  uint32_t east_of(uint32_t pe) const;
  uint32_t south_of(uint32_t pe) const;
  void stage_hop(uint64_t cycle, uint32_t at_pe, const Flit& f, Port p);

  uint16_t w_, h_;
  // current-cycle input latches and next-cycle staging, one slot per router
  std::vector<std::optional<Flit>> cur_n_, cur_w_;
  std::vector<std::optional<Flit>> next_n_, next_w_;
  std::vector<std::optional<Flit>> delivered_flit_;
  std::vector<uint8_t> e_used_, s_used_;
  std::vector<uint64_t> pe_deflections_;  // per-router, reduced in finish_route
  // per-PE so parallel PE stepping writes disjoint slots
  std::vector<uint64_t> pe_injected_, pe_delivered_;

  uint64_t deflections_ = 0;
  std::vector<FlitTraceRow>* trace_ = nullptr;
  std::vector<std::vector<FlitTraceRow>> trace_scratch_;
};

}  // namespace tdp
