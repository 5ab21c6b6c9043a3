#include "liber/prompting.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "liber/errors.hpp"

namespace liber {
namespace {

constexpr std::string_view kSummaryTemplate = R"TPL(You are an experienced recommendation analyst. Read one segment of a user's behavior history and summarize the user's interests during this segment.

[User Profile]
{{profile}}

[Behavior History]
The user interacted with the following items in chronological order. Item attributes and the user's rating (out of 5) are listed when known.
{{behaviors}}

[Analysis Factors]
Analyze the user's preferences from the perspective of these factors: {{factors}}.

Write a concise user interest summary. For each factor, state which values the user prefers and which the user avoids, then describe the user's overall taste in this segment.
)TPL";

constexpr std::string_view kShiftTemplate = R"TPL(You are an experienced recommendation analyst. Compare two consecutive interest summaries of the same user and describe how the user's interests have changed.

[Previous Interest Summary]
{{previous_summary}}

[Current Interest Summary]
{{current_summary}}

[Analysis Factors]
Compare the two summaries from the perspective of these factors: {{factors}}.

Pay more attention to the user's new interests, and eliminate obsolescent interests that no longer appear in the current summary. Write a concise description of the user's interest shift.
)TPL";

constexpr std::string_view kEmptyProfile =
    "No profile information is available for this user.";

// Single left-to-right pass; substituted values are never re-scanned.
std::string render(std::string_view tpl,
                   std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto key = tpl.substr(open, close + 2 - open);
    out.append(tpl.substr(pos, open - pos));
    bool found = false;
    for (const auto& [k, v] : slots) {
      if (k == key) {
        out.append(v);
        found = true;
        break;
      }
    }
    if (!found) out.append(key);
    pos = close + 2;
  }
  out.append(tpl.substr(pos));
  return out;
}

void check_order(const std::string& tpl, std::initializer_list<std::string_view> keys,
                 std::string_view name) {
  std::size_t last = 0;
  for (auto key : keys) {
    const auto pos = tpl.find(key);
    if (pos == std::string::npos) {
      throw ConfigError(std::string(name) + " template lacks " + std::string(key));
    }
    if (pos < last) {
      throw ConfigError(std::string(name) + " template has " + std::string(key) +
                        " out of order");
    }
    last = pos;
  }
}

std::string join_factors(const DatasetFactors& factors) {
  if (factors.factors.empty()) throw PreconditionError("dataset factors must be non-empty");
  std::string out;
  for (std::size_t i = 0; i < factors.factors.size(); ++i) {
    if (i) out += ", ";
    out += factors.factors[i];
  }
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompt template " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) {
  std::size_t code_points = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++code_points;
  }
  return (code_points + 3) / 4;
}

PromptTemplates PromptTemplates::defaults() {
  return {std::string(kSummaryTemplate), std::string(kShiftTemplate)};
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
  PromptTemplates t{slurp(dir + "/summary_prompt.txt"), slurp(dir + "/shift_prompt.txt")};
  t.validate();
  return t;
}

void PromptTemplates::validate() const {
  check_order(summary, {"{{profile}}", "{{behaviors}}", "{{factors}}"}, "summary");
  check_order(shift, {"{{previous_summary}}", "{{current_summary}}", "{{factors}}"},
              "shift");
}

PromptBuilder::PromptBuilder(PromptTemplates templates, TokenEstimator estimator)
    : templates_(std::move(templates)), estimator_(std::move(estimator)) {
  templates_.validate();
}

std::string render_behavior_line(std::size_t ordinal, const Behavior& behavior) {
  std::string line = std::to_string(ordinal) + ". " + behavior.title;
  for (const auto& [name, value] : behavior.attributes) {
    line += " | " + name + ":" + value;
  }
  if (behavior.rating) line += " | rating:" + std::to_string(*behavior.rating) + "/5";
  return line;
}

PromptText PromptBuilder::summary(const UserProfile& profile,
                                  std::span<const Behavior> behaviors,
                                  const DatasetFactors& factors) const {
  if (behaviors.empty()) throw DegenerateInputError("summary prompt needs behaviors");
  std::string lines;
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    if (i) lines += '\n';
    lines += render_behavior_line(i + 1, behaviors[i]);
  }
  const std::string profile_text =
      profile.description.empty() ? std::string(kEmptyProfile) : profile.description;
  const std::string factor_text = join_factors(factors);
  std::string out = render(templates_.summary, {{"{{profile}}", profile_text},
                                                {"{{behaviors}}", lines},
                                                {"{{factors}}", factor_text}});
  PromptText prompt{PromptKind::summary, std::move(out), 0};
  prompt.token_estimate = estimator_(prompt.text);
  return prompt;
}

PromptText PromptBuilder::shift(std::string_view previous_summary,
                                std::string_view current_summary,
                                const DatasetFactors& factors) const {
  if (previous_summary.empty() || current_summary.empty()) {
    throw PreconditionError("shift prompt needs non-empty previous and current summaries");
  }
  const std::string factor_text = join_factors(factors);
  std::string out = render(templates_.shift, {{"{{previous_summary}}", previous_summary},
                                              {"{{current_summary}}", current_summary},
                                              {"{{factors}}", factor_text}});
  PromptText prompt{PromptKind::shift, std::move(out), 0};
  prompt.token_estimate = estimator_(prompt.text);
  return prompt;
}

PromptText build_summary_prompt(const UserProfile& profile, const Partition& partition,
                                const DatasetFactors& factors) {
  return PromptBuilder().summary(profile, partition.behaviors(), factors);
}

PromptText build_shift_prompt(std::string_view previous_summary,
                              std::string_view current_summary,
                              const DatasetFactors& factors) {
  return PromptBuilder().shift(previous_summary, current_summary, factors);
}

std::string run_prompt(LlmContext& ctx, const std::string& user_id,
                       const PromptText& prompt) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  std::string completion;
  try {
    completion = call_with_retry(ctx.retry, [&] { return ctx.client.complete(prompt.text); });
  } catch (const TransportError& e) {
    ctx.ledger.record_failure(user_id, elapsed());
    throw TransportError(std::string("chat client failed after retries: ") + e.what(),
                         prompt.text);
  }
  if (completion.empty()) {
    ctx.ledger.record_failure(user_id, elapsed());
    throw ProtocolError("chat client returned an empty completion");
  }
  ctx.ledger.record_call(user_id, prompt.token_estimate, elapsed());
  return completion;
}

std::string summarize_partition(LlmContext& ctx, const UserProfile& profile,
                                std::span<const Behavior> behaviors,
                                const DatasetFactors& factors) {
  static const PromptBuilder kDefault;
  const PromptBuilder& builder = ctx.builder ? *ctx.builder : kDefault;
  return run_prompt(ctx, profile.user_id, builder.summary(profile, behaviors, factors));
}

std::string summarize_partition(LlmContext& ctx, const UserProfile& profile,
                                const Partition& partition,
                                const DatasetFactors& factors) {
  return summarize_partition(ctx, profile, partition.behaviors(), factors);
}

std::string infer_interest_shift(LlmContext& ctx, const std::string& user_id,
                                 std::string_view current_summary,
                                 std::string_view previous_summary,
                                 const DatasetFactors& factors) {
  static const PromptBuilder kDefault;
  const PromptBuilder& builder = ctx.builder ? *ctx.builder : kDefault;
  return run_prompt(ctx, user_id, builder.shift(previous_summary, current_summary, factors));
}

}  // namespace liber
