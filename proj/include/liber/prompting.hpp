#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liber/behavior_stream.hpp"
#include "liber/chat_client.hpp"
#include "liber/ledger.hpp"

namespace liber {

enum class PromptKind { summary, shift };

struct PromptText {
  PromptKind kind = PromptKind::summary;
  std::string text;
  std::size_t token_estimate = 0;
};

using TokenEstimator = std::function<std::size_t(std::string_view)>;

// ceil(code points / 4).
std::size_t estimate_tokens(std::string_view text);

struct UserProfile {
  std::string user_id;
  std::string description;  // may be empty
};

struct DatasetFactors {
  std::vector<std::string> factors;
};

struct InterestKnowledge {
  std::uint32_t partition_index = 0;
  std::string summary;
  std::optional<std::string> shift;  // absent for the first partition
};

// Prompt templates with {{placeholder}} slots.
//   summary: {{profile}}, {{behaviors}}, {{factors}} in this order
//   shift:   {{previous_summary}}, {{current_summary}}, {{factors}}
struct PromptTemplates {
  std::string summary;
  std::string shift;

  static PromptTemplates defaults();
  // Reads summary_prompt.txt and shift_prompt.txt from `dir`.
  static PromptTemplates load(const std::string& dir);
  // Throws ConfigError when a placeholder is missing or out of order.
  void validate() const;
};

class PromptBuilder {
 public:
  explicit PromptBuilder(PromptTemplates templates = PromptTemplates::defaults(),
                         TokenEstimator estimator = estimate_tokens);

  PromptText summary(const UserProfile& profile,
                     std::span<const Behavior> behaviors,
                     const DatasetFactors& factors) const;
  PromptText shift(std::string_view previous_summary,
                   std::string_view current_summary,
                   const DatasetFactors& factors) const;

 private:
  PromptTemplates templates_;
  TokenEstimator estimator_;
};

std::string render_behavior_line(std::size_t ordinal, const Behavior& behavior);

PromptText build_summary_prompt(const UserProfile& profile,
                                const Partition& partition,
                                const DatasetFactors& factors);
PromptText build_shift_prompt(std::string_view previous_summary,
                              std::string_view current_summary,
                              const DatasetFactors& factors);

// Everything a single language-model request needs besides the prompt.
struct LlmContext {
  ChatClient& client;
  EfficiencyLedger& ledger;
  RetryPolicy retry = RetryPolicy{};
  const PromptBuilder* builder = nullptr;  // defaults when null
};

// Sends the prompt with retries and accounts one call on success.
// Throws TransportError (prompt attached) once retries are exhausted and
// ProtocolError on an empty completion.
std::string run_prompt(LlmContext& ctx, const std::string& user_id,
                       const PromptText& prompt);

std::string summarize_partition(LlmContext& ctx, const UserProfile& profile,
                                std::span<const Behavior> behaviors,
                                const DatasetFactors& factors);
std::string summarize_partition(LlmContext& ctx, const UserProfile& profile,
                                const Partition& partition,
                                const DatasetFactors& factors);

std::string infer_interest_shift(LlmContext& ctx, const std::string& user_id,
                                 std::string_view current_summary,
                                 std::string_view previous_summary,
                                 const DatasetFactors& factors);

}  // namespace liber
