#pragma once

#include <bit>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "tdp/graph.hpp"
#include "tdp/noc.hpp"
#include "tdp/schedule.hpp"

namespace tdp {

// Leading-one detector over one 32-bit flag word. Flag index k lives at bit
// position 31-k, so the leading (most significant) one is the lowest flag
// index, i.e. the lowest local address == most critical node.
std::optional<uint32_t> lod32(uint32_t word);

// Packed 1-bit-per-node flag vector plus the outer summary (one bit per word,
// kept coherent on every set/clear). Default geometry: 128 words x 32 flags.
class ReadyFlags {
 public:
  explicit ReadyFlags(uint32_t n_words);

  void set(uint32_t addr);
  void clear(uint32_t addr);
  bool test(uint32_t addr) const;
  bool any() const { return nonzero_words_ != 0; }
  uint32_t word(uint32_t idx) const { return words_[idx]; }
  uint32_t n_words() const { return static_cast<uint32_t>(words_.size()); }

  // OuterLOD: lowest word index whose summary bit is set
  std::optional<uint32_t> first_set_word() const;
  // shadow oracle: full linear scan for the lowest set address
  std::optional<uint32_t> first_set_addr_scan() const;
  // outer bit i == OR of word i, checked exhaustively
  bool outer_coherent() const;

  template <typename Fn>
  void for_each_set(Fn fn) const {
    for (uint32_t w = 0; w < words_.size(); ++w) {
      uint32_t word = words_[w];
      while (word) {
        uint32_t k = static_cast<uint32_t>(std::countl_zero(word));
        fn(w * 32 + k);
        word &= ~(1u << (31 - k));
      }
    }
  }

 private:
  std::vector<uint32_t> words_;
  std::vector<uint32_t> outer_;  // same bit convention, one bit per word
  uint32_t nonzero_words_ = 0;
};

enum class PeEventKind : uint8_t { Accept, Fire, Writeback, Select, Inject, Stall };
const char* pe_event_name(PeEventKind k);

struct PeEventRow {
  uint64_t cycle;
  uint16_t x, y;
  PeEventKind kind;
  int64_t node;  // global node id, -1 while a pass has not resolved yet
};

struct PeConfig {
  SchedulerKind scheduler = SchedulerKind::OooLod;
  uint32_t latency[5] = {0, 1, 1, 1, 8};  // by Opcode value; IN unused
  uint32_t mem_ports = 4;
  uint32_t fifo_depth = 0;  // 0 = worst case (all local nodes)
  bool check_invariants = true;
};

struct PeCounters {
  uint64_t busy_cycles = 0;
  uint64_t accepts = 0;
  uint64_t loopback_deliveries = 0;
  uint64_t fires = 0;
  uint64_t writebacks = 0;
  uint64_t sched_passes = 0;
  uint64_t injected = 0;
  uint64_t net_stall_cycles = 0;
  uint64_t port_stall_cycles = 0;
  uint64_t done_count = 0;
  uint32_t peak_fifo = 0;
  uint32_t max_ports_used = 0;
  uint64_t pass_timing_violations = 0;
  uint64_t argmax_violations = 0;
  uint64_t coherence_violations = 0;
};

// One token-dataflow processor: local node table, operand buffers,
// PENDING/DONE flag words, single-issue ALU pipeline, fanout streamer and the
// selected scheduler. The engine drives the phases in cycle order; all state
// is private to the PE except injections into its own router.
class Pe {
 public:
  struct FanoutRef {
    uint16_t dest_x, dest_y;
    uint16_t dest_addr;
    uint8_t slot;
    bool local;
  };

  struct LocalNode {
    uint32_t node_id = 0;
    Opcode opcode = Opcode::IN;
    uint32_t crit = 0;
    uint32_t fanout_begin = 0, fanout_end = 0;
    uint32_t operand_bits[2] = {0, 0};
    uint8_t slots_filled = 0;  // bitmask
    uint8_t missing = 0;
    uint32_t result_bits = 0;
    bool fired = false;
  };

  Pe(PeCoord at, uint32_t pe_index, const PeConfig& cfg, uint32_t flag_words);

  void add_node(const LocalNode& n, const std::vector<FanoutRef>& fanouts);
  void finalize();

  // graph inputs are preloaded as already computed: PENDING set so their
  // values stream through the normal fanout path
  void preload_inputs(const std::map<uint32_t, float>& inputs);

  void begin_cycle();
  void accept_phase(uint64_t cycle, std::optional<Flit> delivered);
  void alu_phase(uint64_t cycle);
  void scheduler_phase(uint64_t cycle);
  void stream_phase(uint64_t cycle, Network& net);
  void end_cycle(uint64_t cycle);

  bool drained() const;
  uint64_t done_count() const { return counters_.done_count; }
  uint32_t local_count() const { return static_cast<uint32_t>(nodes_.size()); }
  const PeCounters& counters() const { return counters_; }
  const LocalNode& local_node(uint32_t addr) const { return nodes_[addr]; }
  const ReadyFlags& pending() const { return pending_; }
  const ReadyFlags& done() const { return done_; }
  bool streamer_active() const { return stream_active_; }
  uint32_t fifo_size() const { return static_cast<uint32_t>(fifo_.size()); }

  void set_event_sink(std::vector<PeEventRow>* sink) { events_ = sink; }

  // test hooks: fake a computed result and mark it PENDING
  void debug_make_pending(uint32_t addr, uint32_t result_bits);
  std::optional<uint32_t> debug_selected() const {
    return selected_valid_ ? std::optional<uint32_t>(selected_addr_) : std::nullopt;
  }

  std::string freeze_summary() const;  // one-line state dump for watchdog reports

 private:
  void emit(uint64_t cycle, PeEventKind kind, int64_t node);
  bool charge_port();
  void store_operand(uint64_t cycle, uint32_t addr, uint8_t slot, uint32_t bits, bool from_loopback);
  void writeback(uint64_t cycle, uint32_t addr);
  void fifo_push(uint32_t addr);

  PeCoord at_;
  uint32_t pe_index_ = 0;
  PeConfig cfg_;

  std::vector<LocalNode> nodes_;
  std::vector<FanoutRef> fanout_table_;
  ReadyFlags pending_;
  ReadyFlags done_;

  struct AluEntry {
    uint64_t ready_cycle;
    uint64_t seq;
    uint32_t addr;
    bool operator>(const AluEntry& o) const {
      return std::tie(ready_cycle, seq) > std::tie(o.ready_cycle, o.seq);
    }
  };
  std::priority_queue<AluEntry, std::vector<AluEntry>, std::greater<AluEntry>> alu_;
  uint64_t alu_seq_ = 0;

  struct LoopbackEntry {
    uint16_t dest_addr;
    uint8_t slot;
    uint32_t bits;
  };
  std::deque<LoopbackEntry> loopback_;

  std::deque<uint32_t> fifo_;  // in-order ready queue (local addresses)

  // out-of-order pass state: cycle 1 latches the outer pick and issues the
  // synchronous word read, cycle 2 runs the inner LOD on that snapshot
  uint8_t pass_phase_ = 0;
  uint32_t pass_word_idx_ = 0;
  uint32_t pass_word_snapshot_ = 0;
  uint64_t pass_start_cycle_ = 0;
  uint32_t pass_shadow_addr_ = 0;
  uint32_t pass_shadow_crit_ = 0;

  bool selected_valid_ = false;
  uint32_t selected_addr_ = 0;
  uint64_t selected_cycle_ = 0;

  bool stream_active_ = false;
  uint32_t stream_addr_ = 0;
  uint32_t stream_idx_ = 0;
  std::optional<FanoutRef> staged_;  // fanout entry read and held for injection

  uint32_t ports_used_ = 0;
  bool busy_ = false;
  uint64_t next_serial_ = 0;

  std::vector<PeEventRow>* events_ = nullptr;
  PeCounters counters_;
};

}  // namespace tdp
