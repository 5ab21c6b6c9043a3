#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "liber/chat_client.hpp"
#include "liber/encoding.hpp"

namespace liber {

// Deterministic stand-in for a chat model.
//
// Summary prompts: counts the `<tag_key>:<value>` attributes of liked
// behaviors (rating > 3 or unrated; all behaviors when none is liked) and
// answers "Interest summary: main_interest=<top> secondary_interest=<next>".
// Shift prompts (recognized by two main_interest= markers, previous first):
// "Interest shift: new_interest=<curr> obsolescent_interest=<prev>" when the
// main interest moved, "Interest shift: stable_interest=<curr>" otherwise.
class MockChatClient final : public ChatClient {
 public:
  explicit MockChatClient(std::string tag_key = "topic");

  std::string complete(const std::string& prompt) override;
  std::string kind() const override { return "mock"; }

 private:
  std::string tag_key_;
};

// Bag-of-tokens hashing encoder: every whitespace token seeds a pseudorandom
// unit vector from its FNV-1a hash; a text maps to the average of its token
// vectors (zeros for a text without tokens).
class MockEmbedClient final : public EmbedClient {
 public:
  explicit MockEmbedClient(std::size_t dimension = 768);

  std::vector<Vector> embed(const std::vector<std::string>& texts) override;
  std::string kind() const override { return "mock"; }
  std::size_t dimension() const noexcept { return dimension_; }

  Vector token_vector(std::string_view token) const;

 private:
  std::size_t dimension_;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace liber
