#pragma once

#include <stdexcept>
#include <string>

namespace ccnet {

/// Invalid lattice geometry (misaligned box, margin violation, site outside the domain).
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Solver or eigensolver failure.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad experiment configuration. Carries the offending line when parsed from text.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace ccnet
