#pragma once

#include <string>
#include <vector>

namespace gradctrl {

/// Dispatch one subcommand (solve-state, optimize, check-kkt, grad-check,
/// blowup-scan, slater-check). Returns the process exit code: 0 pass,
/// 1 fail-with-report, 2 config error.
int run_cli(const std::vector<std::string>& args);

}  // namespace gradctrl
