#include <gtest/gtest.h>

#include "liber/behavior_stream.hpp"
#include "liber/mock_clients.hpp"
#include "liber/prompting.hpp"

using namespace liber;

namespace {

Behavior movie(int i, const std::string& topic, int rating = 5) {
  return {"u1", "m" + std::to_string(i), "Movie " + std::to_string(i), {{"topic", topic}},
          rating, i};
}

std::string summary_prompt(const std::vector<Behavior>& behaviors) {
  return PromptBuilder().summary({"u1", ""}, behaviors, {{"topic"}}).text;
}

}  // namespace

TEST(MockChat, MajorityTopicNamedFirst) {
  std::vector<Behavior> bs;
  for (int i = 0; i < 20; ++i) bs.push_back(movie(i, i % 4 == 3 ? "jazz" : "sports"));
  MockChatClient chat;
  const auto answer = chat.complete(summary_prompt(bs));
  EXPECT_EQ(answer, "Interest summary: main_interest=sports secondary_interest=jazz");
  EXPECT_LT(answer.find("sports"), answer.find("jazz"));
}

TEST(MockChat, DislikedBehaviorsIgnored) {
  std::vector<Behavior> bs;
  for (int i = 0; i < 6; ++i) bs.push_back(movie(i, "horror", 1));
  for (int i = 6; i < 8; ++i) bs.push_back(movie(i, "comedy", 5));
  EXPECT_EQ(MockChatClient().complete(summary_prompt(bs)),
            "Interest summary: main_interest=comedy");
}

TEST(MockChat, PureAndUntaggedPartitions) {
  std::vector<Behavior> bs;
  for (int i = 0; i < 5; ++i) bs.push_back(movie(i, "travel"));
  EXPECT_EQ(MockChatClient().complete(summary_prompt(bs)),
            "Interest summary: main_interest=travel");
  EXPECT_EQ(MockChatClient().complete("no tags here"), "Interest summary: main_interest=unknown");
}

TEST(MockChat, ShiftAnswers) {
  const auto prompt = PromptBuilder()
                          .shift("Interest summary: main_interest=sports",
                                 "Interest summary: main_interest=jazz", {{"topic"}})
                          .text;
  EXPECT_EQ(MockChatClient().complete(prompt),
            "Interest shift: new_interest=jazz obsolescent_interest=sports");
  const auto stable = PromptBuilder()
                          .shift("Interest summary: main_interest=jazz",
                                 "Interest summary: main_interest=jazz", {{"topic"}})
                          .text;
  EXPECT_EQ(MockChatClient().complete(stable), "Interest shift: stable_interest=jazz");
}

TEST(MockChat, CustomTagKey) {
  std::vector<Behavior> bs = {movie(0, "x")};
  bs[0].attributes = {{"genre", "noir"}};
  const auto prompt = PromptBuilder().summary({"u1", ""}, bs, {{"genre"}}).text;
  EXPECT_EQ(MockChatClient("genre").complete(prompt), "Interest summary: main_interest=noir");
}

TEST(MockEmbed, DeterministicUnitTokens) {
  MockEmbedClient embed(64);
  const auto a = embed.embed({"jazz", "jazz", "sports", ""});
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].size(), 64);
  EXPECT_EQ(a[0], a[1]);
  EXPECT_NEAR(a[0].norm(), 1.0, 1e-12);
  EXPECT_LT(std::abs(a[0].dot(a[2])), 0.6);
  EXPECT_EQ(a[3], Vector::Zero(64));
}

TEST(MockEmbed, TextIsTokenAverage) {
  MockEmbedClient embed(32);
  const Vector expected = (embed.token_vector("a") + embed.token_vector("b")) / 2.0;
  EXPECT_LE((embed.embed({"a  b"})[0] - expected).norm(), 1e-12);
}

TEST(MockEmbed, SharedTokensAreCloser) {
  MockEmbedClient embed(768);
  const auto v = embed.embed({"main_interest=jazz secondary_interest=sports",
                              "main_interest=jazz secondary_interest=travel",
                              "main_interest=horror secondary_interest=comedy"});
  EXPECT_GT(v[0].dot(v[1]), v[0].dot(v[2]));
}

TEST(Fnv, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 14695981039346656037ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}
