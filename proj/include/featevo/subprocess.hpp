// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>

namespace featevo
{

struct ProcessResult
{
    int exit_code = 0;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
};

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed and `timed_out` is set.
ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout);

/// Single-quotes a value for safe substitution into a shell command.
std::string shell_quote(const std::string& value);

} // namespace featevo
