#pragma once

#include <stdexcept>
#include <string>

namespace leakaudit {

// Invalid argument, configuration value or precondition violation.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised by the raw recording reader; the kind distinguishes the failure.
class FormatError : public IoError {
public:
  enum class Kind { malformed_header, length_mismatch, non_finite_payload };

  FormatError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

// Divergence, non-finite values or degenerate statistics.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace leakaudit
