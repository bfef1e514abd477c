#pragma once

#include <string>

#include "patchcluster/util.hpp"

namespace patchcluster {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;

  bool ok() const { return !timed_out && exit_code == 0; }
};

/// Runs `/bin/sh -c command` in its own process group with stdin closed and
/// stdout/stderr appended to log_file. On timeout the whole group is killed.
ProcessResult run_shell(const std::string& command, int timeout_s, const fs::path& log_file,
                        const std::string& stdin_text = {});

/// Same, but captures stdout into `out`.
ProcessResult run_shell_capture(const std::string& command, int timeout_s, const std::string& stdin_text,
                                std::string& out);

}  // namespace patchcluster
