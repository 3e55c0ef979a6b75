#pragma once

// Batch front end: ereem-lab <command> [--config f] [--seed n] [--out dir]
// [--threads n] [--species n15|n14].

#include <iosfwd>
#include <string>
#include <vector>

namespace ereem::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

inline constexpr int kSchemaVersion = 1;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ereem::cli
