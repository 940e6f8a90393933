#pragma once

#include <stdexcept>
#include <string>

namespace qmeas {

// Exit codes used by the command line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitVerifyFailed = 4,
};

// Bad or inconsistent user input: config files, CLI arguments, grids that
// violate a precondition, resource caps.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A run that started from valid input but hit a numeric guard:
// boundary escape, non-finite values, a density that lost its mass.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested allocation exceeds the configured cap (tensor grids). Treated
// like a configuration problem at the CLI: shrink the grid or raise the cap.
class ResourceError : public std::runtime_error {
  public:
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qmeas
