#include "liber/ledger.hpp"

#include "liber/errors.hpp"

namespace liber {

EfficiencyLedger::EfficiencyLedger(std::string variant_label)
    : label_(std::move(variant_label)) {}

void EfficiencyLedger::record_call(const std::string& user_id,
                                   std::uint64_t prompt_tokens,
                                   double wall_seconds) {
  std::lock_guard lock(mu_);
  auto& u = users_[user_id];
  u.llm_calls += 1;
  u.prompt_tokens += prompt_tokens;
  u.llm_wall_seconds += wall_seconds;
  totals_.llm_calls += 1;
  totals_.prompt_tokens += prompt_tokens;
  totals_.llm_wall_seconds += wall_seconds;
}

void EfficiencyLedger::record_failure(const std::string& user_id,
                                      double wall_seconds) {
  std::lock_guard lock(mu_);
  auto& u = users_[user_id];
  u.failed_calls += 1;
  u.llm_wall_seconds += wall_seconds;
  totals_.failed_calls += 1;
  totals_.llm_wall_seconds += wall_seconds;
}

UserCounters EfficiencyLedger::user(const std::string& user_id) const {
  std::lock_guard lock(mu_);
  auto it = users_.find(user_id);
  return it == users_.end() ? UserCounters{} : it->second;
}

UserCounters EfficiencyLedger::totals() const {
  std::lock_guard lock(mu_);
  return totals_;
}

std::size_t EfficiencyLedger::user_count() const {
  std::lock_guard lock(mu_);
  return users_.size();
}

std::map<std::string, UserCounters> EfficiencyLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return users_;
}

EfficiencyReport ledger_report(const EfficiencyLedger& ledger,
                               std::size_t user_count) {
  if (user_count < 1) throw PreconditionError("ledger_report needs user_count >= 1");
  const auto t = ledger.totals();
  EfficiencyReport r;
  r.variant = ledger.variant_label();
  r.calls_per_user = static_cast<double>(t.llm_calls) / static_cast<double>(user_count);
  r.tokens_per_prompt =
      t.llm_calls == 0 ? 0.0
                       : static_cast<double>(t.prompt_tokens) / static_cast<double>(t.llm_calls);
  r.time_per_user = t.llm_wall_seconds / static_cast<double>(user_count);
  return r;
}

}  // namespace liber
