#include "liber/chat_client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace liber {

std::chrono::milliseconds RetryPolicy::backoff_for(int retry) const {
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, static_cast<double>(retry));
  const double capped = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

void RetryPolicy::wait(int retry) const {
  const auto delay = backoff_for(retry);
  if (sleep) {
    sleep(delay);
  } else if (delay.count() > 0) {
    std::this_thread::sleep_for(delay);
  }
}

RetryPolicy RetryPolicy::immediate(int max_retries) {
  RetryPolicy p;
  p.max_retries = max_retries;
  p.initial_backoff = std::chrono::milliseconds(0);
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

}  // namespace liber
