#pragma once

#include <exception>
#include <string>

#include "cli/config.hpp"

namespace exgcp::cli {

/// Each command reads a flat config, writes its files under cfg["out"]
/// together with manifest.json, and returns a short JSON report.
Json cmd_simulate(const Json& cfg);
Json cmd_fit(const Json& cfg);
Json cmd_render(const Json& cfg);
Json cmd_predict(const Json& cfg);
Json cmd_diag(const Json& cfg);
Json cmd_bench(const Json& cfg);

/// Dispatch by subcommand name.
Json run_command(const std::string& name, const Json& cfg);

/// 2 validation, 3 numerical failure, 4 runaway thinning, 1 anything else.
int exit_code_for(const std::exception& e);

std::string version();

}  // namespace exgcp::cli
