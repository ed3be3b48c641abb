#pragma once

#include <stdexcept>
#include <string>

namespace dynss {

// Invalid parameter value (bad hyperparameter, out-of-domain argument).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or inconsistent input data (CSV parse, schema mismatch).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unusable run configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown at run time (degenerate variance, non-finite state, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dynss
