#include <gtest/gtest.h>

#include "liber/errors.hpp"
#include "liber/synthetic.hpp"

using namespace liber;

namespace {

std::string topic_of(const Behavior& b) {
  for (const auto& [k, v] : b.attributes) {
    if (k == "topic") return v;
  }
  return {};
}

}  // namespace

TEST(Synthetic, ShapeAndDeterminism) {
  const auto a = generate_synthetic_stream({});
  const auto b = generate_synthetic_stream({});
  EXPECT_EQ(a.dataset.records.size(), 1800u);
  ASSERT_EQ(a.users.size(), 10u);
  for (const auto& u : a.users) {
    EXPECT_EQ(u.drift_index, 90u);
    EXPECT_NE(u.initial_topic, u.drifted_topic);
  }
  ASSERT_EQ(a.dataset.records.size(), b.dataset.records.size());
  for (std::size_t i = 0; i < a.dataset.records.size(); ++i) {
    EXPECT_EQ(a.dataset.records[i].behavior, b.dataset.records[i].behavior);
  }
  SyntheticConfig other;
  other.seed = 2;
  EXPECT_NE(generate_synthetic_stream(other).dataset.records[0].behavior,
            a.dataset.records[0].behavior);
}

TEST(Synthetic, LabelsFollowCurrentTopic) {
  SyntheticConfig c;
  c.users = 20;
  const auto s = generate_synthetic_stream(c);
  std::map<std::string, const SyntheticUser*> users;
  for (const auto& u : s.users) users[u.user_id] = &u;
  std::map<std::string, std::size_t> ordinal;
  double pos_match = 0, pos = 0, neg_match = 0, neg = 0;
  for (const auto& r : s.dataset.records) {
    const auto& u = *users.at(r.behavior.user_id);
    const std::size_t i = ordinal[u.user_id]++;
    const auto& current = i < u.drift_index ? u.initial_topic : u.drifted_topic;
    const bool match = topic_of(r.behavior) == current;
    EXPECT_EQ(r.label, LabelRule{}.label(*r.behavior.rating));
    if (r.label == 1) {
      pos += 1;
      pos_match += match;
    } else {
      neg += 1;
      neg_match += match;
    }
  }
  EXPECT_GT(pos_match / pos, neg_match / neg);
}

TEST(Synthetic, StreamsSortedAndInterleaved) {
  const auto s = generate_synthetic_stream({});
  for (std::size_t i = 1; i < s.dataset.records.size(); ++i) {
    EXPECT_LT(s.dataset.records[i - 1].behavior.timestamp, s.dataset.records[i].behavior.timestamp);
  }
  EXPECT_NE(s.dataset.records[0].behavior.user_id, s.dataset.records[1].behavior.user_id);
}

TEST(Synthetic, RejectsSingleTopic) {
  SyntheticConfig c;
  c.topics = 1;
  EXPECT_THROW(generate_synthetic_stream(c), ConfigError);
}
