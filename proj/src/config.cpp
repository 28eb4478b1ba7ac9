#include "tdp/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tdp/errors.hpp"

namespace tdp {

namespace {

std::string_view trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

uint64_t parse_u64_or_throw(std::string_view v, const std::string& file, uint64_t line,
                            std::string_view key) {
  uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError(file, line, std::string(key) + ": expected unsigned integer, got '" +
                                     std::string(v) + "'");
  return out;
}

bool parse_bool_or_throw(std::string_view v, const std::string& file, uint64_t line,
                         std::string_view key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ParseError(file, line, std::string(key) + ": expected boolean, got '" + std::string(v) + "'");
}

}  // namespace

bool apply_config_key(SimConfig& cfg, std::string_view key, std::string_view value,
                      const std::string& file, uint64_t line) {
  auto u = [&] { return parse_u64_or_throw(value, file, line, key); };
  auto b = [&] { return parse_bool_or_throw(value, file, line, key); };

  if (key == "grid_w") cfg.grid_w = static_cast<uint32_t>(u());
  else if (key == "grid_h") cfg.grid_h = static_cast<uint32_t>(u());
  else if (key == "scheduler") {
    if (value == "in_order") cfg.scheduler = SchedulerKind::InOrderFifo;
    else if (value == "ooo") cfg.scheduler = SchedulerKind::OooLod;
    else throw ParseError(file, line, "scheduler: expected in_order|ooo");
  } else if (key == "lat_add") cfg.lat_add = static_cast<uint32_t>(u());
  else if (key == "lat_sub") cfg.lat_sub = static_cast<uint32_t>(u());
  else if (key == "lat_mul") cfg.lat_mul = static_cast<uint32_t>(u());
  else if (key == "lat_div") cfg.lat_div = static_cast<uint32_t>(u());
  else if (key == "mem_ports") cfg.mem_ports = static_cast<uint32_t>(u());
  else if (key == "fifo_depth") {
    if (value == "auto") cfg.fifo_depth = 0;
    else cfg.fifo_depth = static_cast<uint32_t>(u());
  } else if (key == "fifo_entries_per_bram") cfg.fifo_policy.entries_per_bram = static_cast<uint32_t>(u());
  else if (key == "watchdog_factor") cfg.watchdog_factor = static_cast<uint32_t>(u());
  else if (key == "placement") {
    if (value == "round_robin_topo") cfg.placement = PlacePolicy::RoundRobinTopo;
    else if (value == "hash") cfg.placement = PlacePolicy::Hash;
    else throw ParseError(file, line, "placement: expected round_robin_topo|hash");
  } else if (key == "paper_strict") cfg.paper_strict = b();
  else if (key == "check_invariants") cfg.check_invariants = b();
  else if (key == "trace_events") cfg.trace_events = b();
  else if (key == "trace_flits") cfg.trace_flits = b();
  else if (key == "threads") cfg.threads = static_cast<uint32_t>(u());
  else if (key == "seed") cfg.seed = u();
  else if (key == "words_per_bram") cfg.geometry.words_per_bram = static_cast<uint32_t>(u());
  else if (key == "bits_per_word") cfg.geometry.bits_per_word = static_cast<uint32_t>(u());
  else if (key == "flag_bits_per_word") cfg.geometry.flag_bits_per_word = static_cast<uint32_t>(u());
  else if (key == "brams_per_pe") cfg.geometry.brams_per_pe = static_cast<uint32_t>(u());
  else return false;
  return true;
}

SimConfig parse_sim_config(std::string_view text, const std::string& filename) {
  SimConfig cfg;
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
    if (eq == std::string_view::npos)
      throw ParseError(filename, lineno, "expected 'key = value'");
    std::string_view key = trim(lv.substr(0, eq));
    std::string_view value = trim(lv.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError(filename, lineno, "expected 'key = value'");
    if (!apply_config_key(cfg, key, value, filename, lineno))
      throw ParseError(filename, lineno, "unknown key '" + std::string(key) + "'");
  }
  return cfg;
}

SimConfig load_sim_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str(), path);
}

std::string config_keys_help() {
  return
      "grid_w, grid_h            overlay dimensions (default 16x16)\n"
      "scheduler                 in_order | ooo\n"
      "lat_add/sub/mul/div       ALU latencies in cycles (1,1,1,8)\n"
      "mem_ports                 memory accesses per PE per cycle (4)\n"
      "fifo_depth                auto | <entries> (in-order ready queue)\n"
      "fifo_entries_per_bram     FIFO capacity accounting (512)\n"
      "watchdog_factor           livelock bound multiplier (50)\n"
      "placement                 round_robin_topo | hash\n"
      "paper_strict              restrict opcodes to IN/ADD/MUL (0)\n"
      "check_invariants          shadow checks during simulation (1)\n"
      "trace_events, trace_flits per-cycle CSV traces (0)\n"
      "threads                   >1 steps PE/router loops with OpenMP (1)\n"
      "seed                      run seed recorded in reports (0)\n"
      "words_per_bram, bits_per_word, flag_bits_per_word, brams_per_pe\n"
      "                          BRAM geometry (512, 40, 32, 8)\n";
}

}  // namespace tdp
