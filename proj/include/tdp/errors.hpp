#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tdp {

// Process exit codes used by the CLI. Kept distinct so scripts can tell
// failure classes apart.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitCapacity = 4,
  kExitWatchdog = 5,
  kExitRunFailure = 6,  // e.g. in-order FIFO overflow
};

struct ParseError : std::runtime_error {
  ParseError(std::string file, uint64_t line, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
        file(std::move(file)),
        line(line) {}
  std::string file;
  uint64_t line;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WatchdogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FifoOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal consistency trap (double operand delivery, unknown address, ...).
// Reaching this is a simulator bug, not a data error.
struct SimBugError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace tdp
