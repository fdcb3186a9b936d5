#pragma once

#include <stdexcept>
#include <string>

namespace neumann {

// Exception categories. The CLI maps each one to a distinct exit code.

/// Malformed input: bad spectrum, wrong vector lengths, unknown fields.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: no bracket, step underflow, no return to a section.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a mathematical precondition, e.g. a point on a singular
/// stratum handed to a chart that cannot represent it.
class PreconditionError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

} // namespace detail
} // namespace neumann
