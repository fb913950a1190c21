#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replan {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad geometry, unknown type names, schema violations, broken contracts.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Advisor could not produce a usable answer (transport failure or unparseable reply).
class AdvisorError : public Error {
 public:
  AdvisorError(const std::string& what, std::string raw = {})
      : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class TransportError : public AdvisorError {
 public:
  TransportError(const std::string& what, int status = 0)
      : AdvisorError(what), status_(status) {}

  int status() const { return status_; }

 private:
  int status_;
};

// Writes a single warning line to stderr. Silenced with set_warnings_enabled(false).
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace replan
