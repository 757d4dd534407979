#pragma once

#include <stdexcept>
#include <string>

namespace ragen {

/// Invalid configuration, detected before any work starts.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// An operation was called outside its documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model-service call failed. `transport` is set when the endpoint could
/// not be reached at all (refused, timeout) as opposed to answering badly.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& message, int status, int attempts, bool transport)
      : std::runtime_error(message), status_(status), attempts_(attempts), transport_(transport) {}
  int status() const { return status_; }
  int attempts() const { return attempts_; }
  bool transport() const { return transport_; }

 private:
  int status_;
  int attempts_;
  bool transport_;
};

/// Model output could not be parsed into the expected shape.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ragen
