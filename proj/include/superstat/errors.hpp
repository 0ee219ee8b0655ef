#pragma once

#include <stdexcept>
#include <string>

namespace superstat {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A required moment of the variance law is infinite.
class MomentConditionError : public DomainError {
public:
    MomentConditionError(const std::string& moment, const std::string& what)
        : DomainError(what), moment_(moment) {}
    const std::string& moment() const noexcept { return moment_; }

private:
    std::string moment_;
};

/// Numerical integration could not reach the requested tolerance.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver failed where failure indicates a bug or invalid state.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid problem or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace superstat
