#pragma once

#include <stdexcept>
#include <string>

namespace esim {

/// Bad input files, unparseable configs, bad CLI usage.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run parameters or a failure detected while simulating
/// (e.g. the intra-slot event loop exceeding its iteration cap).
class SimulationError : public std::runtime_error {
  public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace esim
