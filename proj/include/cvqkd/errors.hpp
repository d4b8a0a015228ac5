#ifndef CVQKD_ERRORS_HPP
#define CVQKD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvqkd {

// Process exit codes used by the CLI. Stable contract.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfigError = 2,
    kExitSyncError = 3,
    kExitUnphysical = 4,
};

/// Config file could not be parsed or contains unknown keys.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A parameter violates one of its documented invariants.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(const std::string& msg) : ConfigError(msg) {}
};

/// Pattern synchronization failed (no significant correlation peak).
class SyncError : public std::runtime_error {
public:
    explicit SyncError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A covariance matrix or detector model is outside the physical region.
class UnphysicalStateError : public std::runtime_error {
public:
    explicit UnphysicalStateError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cvqkd

#endif // CVQKD_ERRORS_HPP
