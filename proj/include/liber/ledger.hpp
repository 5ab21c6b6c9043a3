#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>

namespace liber {

struct UserCounters {
  std::uint64_t llm_calls = 0;
  std::uint64_t prompt_tokens = 0;
  double llm_wall_seconds = 0.0;
  std::uint64_t failed_calls = 0;
};

// Language-model call accounting. Counters only ever grow within a run.
// All members are safe to call from concurrent user pipelines.
class EfficiencyLedger {
 public:
  explicit EfficiencyLedger(std::string variant_label = "full");

  void record_call(const std::string& user_id, std::uint64_t prompt_tokens,
                   double wall_seconds);
  void record_failure(const std::string& user_id, double wall_seconds);

  UserCounters user(const std::string& user_id) const;
  UserCounters totals() const;
  std::size_t user_count() const;
  std::map<std::string, UserCounters> snapshot() const;
  const std::string& variant_label() const noexcept { return label_; }

 private:
  std::string label_;
  mutable std::mutex mu_;
  std::map<std::string, UserCounters> users_;
  UserCounters totals_;
};

struct EfficiencyReport {
  std::string variant;
  double calls_per_user = 0.0;
  double tokens_per_prompt = 0.0;
  double time_per_user = 0.0;
};

// Averages over users (calls, time) and over calls (tokens).
EfficiencyReport ledger_report(const EfficiencyLedger& ledger,
                               std::size_t user_count);

}  // namespace liber
