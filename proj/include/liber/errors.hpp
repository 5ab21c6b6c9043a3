#pragma once

#include <stdexcept>
#include <string>

namespace liber {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Behavior routed to a UserState that belongs to another user.
class IdentityError : public Error {
 public:
  using Error::Error;
};

// Empty inputs where at least one element is required.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Transport-level client failure. Retryable.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string prompt = {})
      : Error(what), prompt_(std::move(prompt)) {}

  const std::string& prompt() const noexcept { return prompt_; }

 private:
  std::string prompt_;
};

// The backend answered, but the answer is unusable (empty completion,
// missing JSON path, zero-length vector). Not retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace liber
