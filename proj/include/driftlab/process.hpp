#pragma once

#include <chrono>
#include <string>

namespace driftlab {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  bool timed_out = false;
  std::string output;  // merged stdout + stderr, truncated to 64 KiB
};

// Runs `command` through /bin/sh -c in its own process group; the whole group
// is killed when the timeout expires. POSIX only.
ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout);

// Single-quotes a value for /bin/sh.
std::string shell_quote(std::string_view value);

}  // namespace driftlab
