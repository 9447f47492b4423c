#pragma once

#include <stdexcept>
#include <string>

namespace adaqn {

/// Raised when a caller breaks a documented precondition (shape mismatch,
/// index out of range, sampling from an empty buffer, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised when a value that must be finite is not (targets, gradients,
/// network outputs).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration. `field` names the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

namespace detail {

inline void require(bool condition, const char* message) {
    if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace adaqn
