#include "tdp/pe.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "tdp/errors.hpp"

namespace tdp {

std::optional<uint32_t> lod32(uint32_t word) {
  if (word == 0) return std::nullopt;
  return static_cast<uint32_t>(std::countl_zero(word));
}

const char* pe_event_name(PeEventKind k) {
  switch (k) {
    case PeEventKind::Accept: return "accept";
    case PeEventKind::Fire: return "fire";
    case PeEventKind::Writeback: return "writeback";
    case PeEventKind::Select: return "select";
    case PeEventKind::Inject: return "inject";
    case PeEventKind::Stall: return "stall";
  }
  return "?";
}

ReadyFlags::ReadyFlags(uint32_t n_words)
    : words_(n_words, 0), outer_((n_words + 31) / 32, 0) {}

void ReadyFlags::set(uint32_t addr) {
  uint32_t w = addr / 32, k = addr % 32;
  uint32_t before = words_[w];
  words_[w] = before | (1u << (31 - k));
  if (before == 0) {
    outer_[w / 32] |= 1u << (31 - (w % 32));
    ++nonzero_words_;
  }
}

void ReadyFlags::clear(uint32_t addr) {
  uint32_t w = addr / 32, k = addr % 32;
  uint32_t before = words_[w];
  words_[w] = before & ~(1u << (31 - k));
  if (before != 0 && words_[w] == 0) {
    outer_[w / 32] &= ~(1u << (31 - (w % 32)));
    --nonzero_words_;
  }
}

bool ReadyFlags::test(uint32_t addr) const {
  return (words_[addr / 32] >> (31 - (addr % 32))) & 1u;
}

std::optional<uint32_t> ReadyFlags::first_set_word() const {
  for (uint32_t ow = 0; ow < outer_.size(); ++ow) {
    if (auto k = lod32(outer_[ow])) return ow * 32 + *k;
  }
  return std::nullopt;
}

std::optional<uint32_t> ReadyFlags::first_set_addr_scan() const {
  for (uint32_t w = 0; w < words_.size(); ++w) {
    for (uint32_t k = 0; k < 32; ++k) {
      if ((words_[w] >> (31 - k)) & 1u) return w * 32 + k;
    }
  }
  return std::nullopt;
}

bool ReadyFlags::outer_coherent() const {
  for (uint32_t w = 0; w < words_.size(); ++w) {
    bool outer_bit = (outer_[w / 32] >> (31 - (w % 32))) & 1u;
    if (outer_bit != (words_[w] != 0)) return false;
  }
  return true;
}

Pe::Pe(PeCoord at, uint32_t pe_index, const PeConfig& cfg, uint32_t flag_words)
    : at_(at), pe_index_(pe_index), cfg_(cfg), pending_(flag_words), done_(flag_words) {
  // serials partitioned per PE so parallel stepping needs no shared counter
  next_serial_ = (static_cast<uint64_t>(pe_index) << 40) + 1;
}

void Pe::add_node(const LocalNode& n, const std::vector<FanoutRef>& fanouts) {
  LocalNode copy = n;
  copy.fanout_begin = static_cast<uint32_t>(fanout_table_.size());
  fanout_table_.insert(fanout_table_.end(), fanouts.begin(), fanouts.end());
  copy.fanout_end = static_cast<uint32_t>(fanout_table_.size());
  copy.missing = static_cast<uint8_t>(opcode_arity(copy.opcode));
  nodes_.push_back(copy);
}

void Pe::finalize() {
  if (nodes_.size() > static_cast<size_t>(pending_.n_words()) * 32)
    throw CapacityError("PE (" + std::to_string(at_.x) + "," + std::to_string(at_.y) +
                        "): node count exceeds flag capacity");
  if (cfg_.fifo_depth == 0) cfg_.fifo_depth = static_cast<uint32_t>(nodes_.size());
}

void Pe::preload_inputs(const std::map<uint32_t, float>& inputs) {
  // ascending node id == arrival order a host loader would produce
  for (uint32_t addr = 0; addr < nodes_.size(); ++addr) {
    if (nodes_[addr].opcode != Opcode::IN) continue;
    auto it = inputs.find(nodes_[addr].node_id);
    if (it == inputs.end()) throw SimBugError("pe: IN node without init value");
    nodes_[addr].result_bits = std::bit_cast<uint32_t>(it->second);
  }
  std::vector<uint32_t> in_addrs;
  for (uint32_t addr = 0; addr < nodes_.size(); ++addr)
    if (nodes_[addr].opcode == Opcode::IN) in_addrs.push_back(addr);
  std::sort(in_addrs.begin(), in_addrs.end(),
            [&](uint32_t a, uint32_t b) { return nodes_[a].node_id < nodes_[b].node_id; });
  for (uint32_t addr : in_addrs) {
    LocalNode& n = nodes_[addr];
    n.fired = true;
    counters_.fires++;
    if (n.fanout_begin == n.fanout_end) {
      done_.set(addr);
      counters_.done_count++;
    } else {
      pending_.set(addr);
      if (cfg_.scheduler == SchedulerKind::InOrderFifo) fifo_push(addr);
    }
  }
}

void Pe::emit(uint64_t cycle, PeEventKind kind, int64_t node) {
  if (events_) events_->push_back({cycle, at_.x, at_.y, kind, node});
}

bool Pe::charge_port() {
  if (ports_used_ >= cfg_.mem_ports) return false;
  ++ports_used_;
  counters_.max_ports_used = std::max(counters_.max_ports_used, ports_used_);
  return true;
}

void Pe::fifo_push(uint32_t addr) {
  if (fifo_.size() >= cfg_.fifo_depth)
    throw FifoOverflowError("PE (" + std::to_string(at_.x) + "," + std::to_string(at_.y) +
                            "): ready FIFO overflow at depth " + std::to_string(cfg_.fifo_depth));
  fifo_.push_back(addr);
  counters_.peak_fifo = std::max<uint32_t>(counters_.peak_fifo, static_cast<uint32_t>(fifo_.size()));
}

void Pe::begin_cycle() {
  ports_used_ = 0;
  busy_ = false;
}

void Pe::store_operand(uint64_t cycle, uint32_t addr, uint8_t slot, uint32_t bits,
                       bool from_loopback) {
  if (addr >= nodes_.size()) throw SimBugError("pe: delivery to unknown address");
  LocalNode& n = nodes_[addr];
  if (opcode_arity(n.opcode) == 0) throw SimBugError("pe: delivery to IN node");
  if (n.slots_filled & (1u << slot)) throw SimBugError("pe: double delivery to filled slot");
  n.slots_filled |= 1u << slot;
  n.operand_bits[slot] = bits;
  n.missing--;
  counters_.accepts++;
  if (from_loopback) counters_.loopback_deliveries++;
  busy_ = true;
  emit(cycle, PeEventKind::Accept, n.node_id);
  if (n.missing == 0) {
    // dataflow firing rule: all operands present
    float a = std::bit_cast<float>(n.operand_bits[0]);
    float b = std::bit_cast<float>(n.operand_bits[1]);
    n.result_bits = std::bit_cast<uint32_t>(apply_opcode(n.opcode, a, b));
    n.fired = true;
    counters_.fires++;
    alu_.push({cycle + cfg_.latency[static_cast<int>(n.opcode)], alu_seq_++, addr});
    emit(cycle, PeEventKind::Fire, n.node_id);
  }
}

void Pe::accept_phase(uint64_t cycle, std::optional<Flit> delivered) {
  if (delivered) {
    if (!charge_port()) throw SimBugError("pe: ejection accepted without a memory port");
    store_operand(cycle, delivered->local_addr, delivered->slot, delivered->payload, false);
    return;
  }
  // the network has ejection priority; loopback drains on quiet cycles
  if (!loopback_.empty() && ports_used_ < cfg_.mem_ports) {
    charge_port();
    LoopbackEntry e = loopback_.front();
    loopback_.pop_front();
    store_operand(cycle, e.dest_addr, e.slot, e.bits, true);
  }
}

void Pe::writeback(uint64_t cycle, uint32_t addr) {
  LocalNode& n = nodes_[addr];
  busy_ = true;
  counters_.writebacks++;
  emit(cycle, PeEventKind::Writeback, n.node_id);
  if (n.fanout_begin == n.fanout_end) {
    // nothing to stream: completion tracked directly, scheduler never sees it
    done_.set(addr);
    counters_.done_count++;
  } else {
    pending_.set(addr);
    if (cfg_.scheduler == SchedulerKind::InOrderFifo) fifo_push(addr);
  }
}

void Pe::alu_phase(uint64_t cycle) {
  if (alu_.empty() || alu_.top().ready_cycle > cycle) return;
  // one writeback port; contenders drain in completion order
  if (!charge_port()) {
    counters_.port_stall_cycles++;
    return;
  }
  AluEntry e = alu_.top();
  alu_.pop();
  writeback(cycle, e.addr);
}

void Pe::scheduler_phase(uint64_t cycle) {
  if (stream_active_ || selected_valid_) return;

  if (cfg_.scheduler == SchedulerKind::InOrderFifo) {
    if (fifo_.empty()) return;
    uint32_t addr = fifo_.front();
    fifo_.pop_front();
    selected_addr_ = addr;
    selected_valid_ = true;
    selected_cycle_ = cycle;
    counters_.sched_passes++;
    busy_ = true;
    emit(cycle, PeEventKind::Select, nodes_[addr].node_id);
    return;
  }

  if (pass_phase_ == 0) {
    if (!pending_.any()) return;
    auto w = pending_.first_set_word();
    pass_word_idx_ = *w;
    // synchronous read issued now; the inner LOD sees this cycle's contents
    pass_word_snapshot_ = pending_.word(pass_word_idx_);
    pass_start_cycle_ = cycle;
    if (cfg_.check_invariants) {
      // shadow oracle sampled at the same instant the pass samples its state
      auto shadow = pending_.first_set_addr_scan();
      pass_shadow_addr_ = shadow ? *shadow : UINT32_MAX;
      pass_shadow_crit_ = 0;
      pending_.for_each_set([&](uint32_t a) {
        pass_shadow_crit_ = std::max(pass_shadow_crit_, nodes_[a].crit);
      });
    }
    pass_phase_ = 1;
    busy_ = true;
    emit(cycle, PeEventKind::Select, -1);
    return;
  }

  // pass cycle 2: inner LOD over the latched word
  auto k = lod32(pass_word_snapshot_);
  if (!k) throw SimBugError("pe: empty word latched by outer LOD");
  uint32_t addr = pass_word_idx_ * 32 + *k;
  pass_phase_ = 0;
  selected_addr_ = addr;
  selected_valid_ = true;
  selected_cycle_ = cycle;
  counters_.sched_passes++;
  if (cycle - pass_start_cycle_ + 1 != 2) counters_.pass_timing_violations++;
  if (cfg_.check_invariants) {
    // the LOD pick must be the lowest pending address as of the pass start,
    // which by layout order is a maximal-criticality pending node
    // (lowest-address tie-break)
    if (addr != pass_shadow_addr_ || nodes_[addr].crit != pass_shadow_crit_)
      counters_.argmax_violations++;
  }
  busy_ = true;
  emit(cycle, PeEventKind::Select, nodes_[addr].node_id);
}

void Pe::stream_phase(uint64_t cycle, Network& net) {
  if (!stream_active_) {
    // streaming starts the cycle after selection completes
    if (!selected_valid_ || selected_cycle_ >= cycle) return;
    stream_active_ = true;
    stream_addr_ = selected_addr_;
    stream_idx_ = nodes_[stream_addr_].fanout_begin;
    selected_valid_ = false;
    staged_.reset();
  }

  LocalNode& n = nodes_[stream_addr_];
  busy_ = true;

  if (!staged_) {
    // fanout entry read contends for a memory port; held once read
    if (!charge_port()) {
      counters_.port_stall_cycles++;
      emit(cycle, PeEventKind::Stall, n.node_id);
      return;
    }
    staged_ = fanout_table_[stream_idx_];
  }

  bool sent = false;
  if (staged_->local) {
    loopback_.push_back({staged_->dest_addr, staged_->slot, n.result_bits});
    sent = true;
  } else {
    Flit f;
    f.dest_x = staged_->dest_x;
    f.dest_y = staged_->dest_y;
    f.local_addr = staged_->dest_addr;
    f.slot = staged_->slot;
    f.payload = n.result_bits;
    f.serial = next_serial_++;
    if (net.try_inject(cycle, pe_index_, f)) {
      counters_.injected++;
      sent = true;
    } else {
      next_serial_--;  // refused: same fanout retried next cycle
      counters_.net_stall_cycles++;
      emit(cycle, PeEventKind::Stall, n.node_id);
    }
  }

  if (!sent) return;
  emit(cycle, PeEventKind::Inject, n.node_id);
  staged_.reset();
  ++stream_idx_;
  if (stream_idx_ == n.fanout_end) {
    // last fanout gone: retire the node; a new pass may begin next cycle
    pending_.clear(stream_addr_);
    done_.set(stream_addr_);
    counters_.done_count++;
    stream_active_ = false;
  }
}

void Pe::end_cycle(uint64_t cycle) {
  (void)cycle;
  if (busy_) counters_.busy_cycles++;
}

bool Pe::drained() const {
  return alu_.empty() && loopback_.empty() && !stream_active_ && !selected_valid_ &&
         fifo_.empty() && pass_phase_ == 0 && !pending_.any();
}

void Pe::debug_make_pending(uint32_t addr, uint32_t result_bits) {
  nodes_[addr].result_bits = result_bits;
  nodes_[addr].fired = true;
  pending_.set(addr);
  if (cfg_.scheduler == SchedulerKind::InOrderFifo) fifo_push(addr);
}

std::string Pe::freeze_summary() const {
  std::ostringstream os;
  os << "PE(" << at_.x << "," << at_.y << ") done=" << counters_.done_count << "/" << nodes_.size()
     << " pending=" << (pending_.any() ? "yes" : "no") << " fifo=" << fifo_.size()
     << " alu=" << alu_.size() << " loopback=" << loopback_.size()
     << " streamer=" << (stream_active_ ? "active" : "idle");
  return os.str();
}

}  // namespace tdp
