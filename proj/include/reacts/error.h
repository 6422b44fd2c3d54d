#pragma once

#include <stdexcept>
#include <string>

namespace reacts {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files (corpus, ground truth, snapshots, scripts).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration; reported before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A prompt template was rendered with a missing slot.
class TemplateError : public Error {
 public:
  using Error::Error;
};

// Backend failure: transport errors after retries, non-2xx responses and
// malformed payloads. status is the HTTP status, or 0 when none was received.
class GatewayError : public Error {
 public:
  explicit GatewayError(const std::string &what, int status = 0)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Predictions and references that do not line up.
class EvaluationMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace reacts
