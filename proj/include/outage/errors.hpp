#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace outage {

/// Argument outside the mathematical domain of a function (negative or
/// non-finite input, empty selection list, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid scenario or user profile. Carries the offending user when known.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
    ConfigError(std::size_t user, const std::string& field, const std::string& what)
        : std::invalid_argument("user " + std::to_string(user + 1) + ", field '" + field + "': " + what),
          user_(user), field_(field) {}

    bool has_user() const noexcept { return user_ != npos; }
    std::size_t user() const noexcept { return user_; }
    const std::string& field() const noexcept { return field_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t user_ = npos;
    std::string field_;
};

/// Requested evaluation path is not available for this problem size.
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_estimate, double error_estimate)
        : std::runtime_error(what), best_(best_estimate), error_(error_estimate) {}

    double best_estimate() const noexcept { return best_; }
    double error_estimate() const noexcept { return error_; }

private:
    double best_;
    double error_;
};

} // namespace outage
