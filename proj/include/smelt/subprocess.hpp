#pragma once

#include <string>
#include <vector>

namespace smelt {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  bool spawn_failed = false;
  bool signaled = false;
  std::string stdout_text;
  std::string stderr_text;
};

/// Runs argv[0] with the given arguments and working directory, capturing
/// both output streams. The child is killed once `timeout_seconds` elapses.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& workdir, double timeout_seconds);

}  // namespace smelt
