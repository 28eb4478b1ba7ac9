#include "tdp/noc.hpp"

#include "tdp/errors.hpp"

namespace tdp {

const char* port_name(Port p) {
  switch (p) {
    case Port::E: return "E";
    case Port::S: return "S";
    case Port::Exit: return "EXIT";
    case Port::None: return "NONE";
  }
  return "?";
}

Port desired_port(const Flit& f, uint16_t at_x, uint16_t at_y) {
  if (f.dest_x == at_x && f.dest_y == at_y) return Port::Exit;
  if (f.dest_x != at_x) return Port::E;
  return Port::S;
}

ArbResult router_arbitrate(uint16_t x, uint16_t y, const ArbInputs& in) {
  ArbResult r;
  bool e_taken = false, s_taken = false, exit_taken = false;

  auto realize = [&](Port want) -> Port {
    // an Exit request against a busy PE behaves like a taken port
    if (want == Port::Exit && (exit_taken || !in.ejection_ready)) return Port::None;
    if (want == Port::S && s_taken) return Port::None;
    if (want == Port::E && e_taken) return Port::None;
    return want;
  };
  auto claim = [&](Port p) {
    if (p == Port::E) e_taken = true;
    if (p == Port::S) s_taken = true;
    if (p == Port::Exit) exit_taken = true;
  };

  if (in.n) {
    if (in.n->dest_x != x) throw SimBugError("router: N input not column-aligned");
    Port want = desired_port(*in.n, x, y);
    Port got = realize(want);
    if (got == Port::None) {
      got = Port::S;  // Exit refused (PE busy): keep circling the column
      r.deflections++;
    }
    r.n_out = got;
    claim(got);
  }
  if (in.w) {
    Port want = desired_port(*in.w, x, y);
    Port got = realize(want);
    if (got == Port::None) {
      got = Port::E;  // deflect around the row; N never takes E
      r.deflections++;
    }
    r.w_out = got;
    claim(got);
  }
  if (in.pe) {
    Port want = desired_port(*in.pe, x, y);
    if (want == Port::Exit) throw SimBugError("router: self-destined injection");
    if (realize(want) == want) {
      r.pe_out = want;
      claim(want);
    }
  }
  return r;
}

Network::Network(uint16_t grid_w, uint16_t grid_h) : w_(grid_w), h_(grid_h) {
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("network: grid must be >= 1x1");
  const uint32_t n = n_pes();
  cur_n_.resize(n);
  cur_w_.resize(n);
  next_n_.resize(n);
  next_w_.resize(n);
  delivered_flit_.resize(n);
  e_used_.assign(n, 0);
  s_used_.assign(n, 0);
  pe_deflections_.assign(n, 0);
  pe_injected_.assign(n, 0);
  pe_delivered_.assign(n, 0);
  trace_scratch_.resize(n);
}

uint32_t Network::east_of(uint32_t pe) const {
  uint16_t x = static_cast<uint16_t>(pe % w_);
  uint16_t y = static_cast<uint16_t>(pe / w_);
  return idx(static_cast<uint16_t>((x + 1) % w_), y);
}

uint32_t Network::south_of(uint32_t pe) const {
  uint16_t x = static_cast<uint16_t>(pe % w_);
  uint16_t y = static_cast<uint16_t>(pe / w_);
  return idx(x, static_cast<uint16_t>((y + 1) % h_));
}

void Network::begin_cycle() {
  cur_n_.swap(next_n_);
  cur_w_.swap(next_w_);
  std::fill(next_n_.begin(), next_n_.end(), std::nullopt);
  std::fill(next_w_.begin(), next_w_.end(), std::nullopt);
  std::fill(e_used_.begin(), e_used_.end(), 0);
  std::fill(s_used_.begin(), s_used_.end(), 0);
}

void Network::stage_hop(uint64_t cycle, uint32_t at_pe, const Flit& f, Port p) {
  uint16_t x = static_cast<uint16_t>(at_pe % w_);
  uint16_t y = static_cast<uint16_t>(at_pe / w_);
  if (trace_) trace_scratch_[at_pe].push_back({cycle, f.serial, x, y, p});
  switch (p) {
    case Port::E:
      next_w_[east_of(at_pe)] = f;
      e_used_[at_pe] = 1;
      break;
    case Port::S:
      next_n_[south_of(at_pe)] = f;
      s_used_[at_pe] = 1;
      break;
    case Port::Exit:
      if (delivered_flit_[at_pe]) throw SimBugError("network: delivery slot already occupied");
      delivered_flit_[at_pe] = f;
      break;
    case Port::None:
      throw SimBugError("network: flit assigned no port");
  }
}

void Network::route_one(uint64_t cycle, uint32_t pe, const std::vector<uint8_t>* ejection_ready) {
  if (!cur_n_[pe] && !cur_w_[pe]) return;
  uint16_t x = static_cast<uint16_t>(pe % w_);
  uint16_t y = static_cast<uint16_t>(pe / w_);
  ArbInputs in;
  in.n = cur_n_[pe];
  in.w = cur_w_[pe];
  cur_n_[pe].reset();  // consumed; flits now live in staging or delivery slots
  cur_w_[pe].reset();
  in.ejection_ready = ejection_ready ? (*ejection_ready)[pe] != 0 : true;
  ArbResult res = router_arbitrate(x, y, in);
  if (in.n) stage_hop(cycle, pe, *in.n, res.n_out);
  if (in.w) stage_hop(cycle, pe, *in.w, res.w_out);
  pe_deflections_[pe] += res.deflections;
}

void Network::finish_route() {
  for (uint32_t pe = 0; pe < n_pes(); ++pe) {
    deflections_ += pe_deflections_[pe];
    pe_deflections_[pe] = 0;
  }
}

void Network::end_cycle() {
  if (!trace_) return;
  for (uint32_t pe = 0; pe < n_pes(); ++pe) {
    for (const auto& row : trace_scratch_[pe]) trace_->push_back(row);
    trace_scratch_[pe].clear();
  }
}

void Network::route(uint64_t cycle, const std::vector<uint8_t>* ejection_ready) {
  for (uint32_t pe = 0; pe < n_pes(); ++pe) route_one(cycle, pe, ejection_ready);
  finish_route();
}

std::optional<Flit> Network::take_delivery(uint32_t pe) {
  if (!delivered_flit_[pe]) return std::nullopt;
  Flit f = *delivered_flit_[pe];
  delivered_flit_[pe] = std::nullopt;
  pe_delivered_[pe]++;
  return f;
}

bool Network::try_inject(uint64_t cycle, uint32_t pe, const Flit& f) {
  uint16_t x = static_cast<uint16_t>(pe % w_);
  uint16_t y = static_cast<uint16_t>(pe / w_);
  Port want = desired_port(f, x, y);
  if (want == Port::Exit) throw SimBugError("network: self-destined injection");
  if (want == Port::E && e_used_[pe]) return false;
  if (want == Port::S && s_used_[pe]) return false;
  stage_hop(cycle, pe, f, want);
  pe_injected_[pe]++;
  return true;
}

bool Network::empty() const {
  for (uint32_t pe = 0; pe < n_pes(); ++pe)
    if (cur_n_[pe] || cur_w_[pe] || next_n_[pe] || next_w_[pe] || delivered_flit_[pe]) return false;
  return true;
}

uint64_t Network::injected() const {
  uint64_t t = 0;
  for (uint64_t v : pe_injected_) t += v;
  return t;
}

uint64_t Network::delivered() const {
  uint64_t t = 0;
  for (uint64_t v : pe_delivered_) t += v;
  return t;
}

uint64_t Network::in_flight() const { return injected() - delivered(); }

uint64_t Network::count_flits() const {
  uint64_t c = 0;
  for (uint32_t pe = 0; pe < n_pes(); ++pe) {
    c += cur_n_[pe].has_value() + cur_w_[pe].has_value() + next_n_[pe].has_value() +
         next_w_[pe].has_value() + delivered_flit_[pe].has_value();
  }
  return c;
}

std::vector<std::optional<Flit>> Network::step(uint64_t cycle,
                                               const std::vector<std::optional<Flit>>& injections,
                                               std::vector<uint8_t>* accepted) {
  begin_cycle();
  route(cycle, nullptr);
  std::vector<std::optional<Flit>> out(n_pes());
  for (uint32_t pe = 0; pe < n_pes(); ++pe) out[pe] = take_delivery(pe);
  if (accepted) accepted->assign(n_pes(), 0);
  for (uint32_t pe = 0; pe < n_pes() && pe < injections.size(); ++pe) {
    if (injections[pe]) {
      bool ok = try_inject(cycle, pe, *injections[pe]);
      if (accepted) (*accepted)[pe] = ok ? 1 : 0;
    }
  }
  end_cycle();
  return out;
}

}  // namespace tdp
