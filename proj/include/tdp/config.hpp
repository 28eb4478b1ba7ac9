#pragma once

#include <string>
#include <string_view>

#include "tdp/sim.hpp"

namespace tdp {

// Line-oriented `key = value` text, '#' comments. Unknown keys are errors so
// experiment typos surface instead of silently running defaults.
SimConfig parse_sim_config(std::string_view text, const std::string& filename = "<config>");
SimConfig load_sim_config_file(const std::string& path);

// Applies one key to a config; returns false when the key is not a simulation
// key (the sweep parser uses this to layer its own keys on top).
bool apply_config_key(SimConfig& cfg, std::string_view key, std::string_view value,
                      const std::string& filename, uint64_t line);

std::string config_keys_help();

}  // namespace tdp
