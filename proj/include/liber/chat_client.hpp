#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>

#include "liber/errors.hpp"

namespace liber {

// Single-turn chat completion backend. Implementations must tolerate
// concurrent complete() calls from different user pipelines.
class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Throws TransportError on connection/HTTP failures.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string kind() const = 0;
};

// Retries TransportError only; every other exception propagates at once.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds backoff_for(int retry) const;
  void wait(int retry) const;

  // No waiting; for tests and mocks.
  static RetryPolicy immediate(int max_retries = 3);
};

template <typename Fn>
auto call_with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.max_retries) throw;
      policy.wait(attempt);
    }
  }
}

}  // namespace liber
