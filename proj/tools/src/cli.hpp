#pragma once

#include <iosfwd>
#include <span>

#include "cube_transport/verification.hpp"
#include "run_config.hpp"

namespace cube_transport::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// kExitPass iff every report passes.
int exit_code(std::span<const VerificationReport> reports);

/// Runs the configured command and writes its reports. Returns kExitPass iff
/// every check passes, kExitCheckFailed otherwise; library errors propagate.
int run(const RunConfig& config, std::ostream& log);

/// Parses flags (and an optional --config document), then runs. Usage,
/// config and I/O errors map to kExitUsage with a message on `err`.
int main_entry(int argc, char** argv, std::ostream& log, std::ostream& err);

}  // namespace cube_transport::cli
