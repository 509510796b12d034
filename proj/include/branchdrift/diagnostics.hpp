#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace branchdrift {

/// Non-fatal finding carried alongside a result. The CLI prints these as
/// JSON lines on stderr.
struct Warning {
  std::string stage;  // "event_log", "petri_net", "alignment", ...
  std::string code;   // short machine-readable identifier
  std::string message;
};

using Warnings = std::vector<Warning>;

/// Input could not be read or interpreted (maps to CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed XML in a log or model file.
class XmlSyntaxError : public InputError {
 public:
  XmlSyntaxError(const std::string& message, long line, long column)
      : InputError(message), line_(line), column_(column) {}
  long line() const { return line_; }
  long column() const { return column_; }

 private:
  long line_;
  long column_;
};

/// Caller supplied an invalid parameter.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A configured resource bound was exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace branchdrift
