#include <gtest/gtest.h>

#include <random>
#include <type_traits>

#include "liber/behavior_stream.hpp"
#include "liber/errors.hpp"

using namespace liber;

namespace {

Behavior make(const std::string& user, int i) {
  Behavior b;
  b.user_id = user;
  b.item_id = "item" + std::to_string(i);
  b.title = "Title " + std::to_string(i);
  b.attributes = {{"genre", i % 2 ? "comedy" : "drama"}};
  b.rating = 1 + i % 5;
  b.timestamp = 1000 + i;
  return b;
}

std::vector<Behavior> cache_of(std::size_t n) {
  std::vector<Behavior> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make("u", static_cast<int>(i)));
  return out;
}

}  // namespace

TEST(PartitionCondition, LengthRule) {
  PartitionConfig k20{20};
  EXPECT_TRUE(check_partition_condition(cache_of(20), k20));
  EXPECT_FALSE(check_partition_condition(cache_of(0), k20));
  EXPECT_FALSE(check_partition_condition(cache_of(19), k20));
  EXPECT_TRUE(check_partition_condition(cache_of(21), k20));
}

TEST(PartitionCondition, KMustBePositive) {
  EXPECT_THROW(validate(PartitionConfig{0}), ConfigError);
  EXPECT_THROW(LengthCondition(PartitionConfig{0}), ConfigError);
}

TEST(UserState, TwentyBehaviorsSealOnePartition) {
  UserState s("u");
  for (int i = 0; i < 19; ++i) {
    auto out = s.ingest(make("u", i), PartitionConfig{20});
    ASSERT_TRUE(std::holds_alternative<CacheAppended>(out));
    EXPECT_EQ(std::get<CacheAppended>(out).cache_size, static_cast<std::size_t>(i + 1));
  }
  auto out = s.ingest(make("u", 19), PartitionConfig{20});
  ASSERT_TRUE(std::holds_alternative<PartitionSealed>(out));
  const auto& p = std::get<PartitionSealed>(out).partition;
  EXPECT_EQ(p.index(), 1u);
  EXPECT_EQ(p.size(), 20u);
  EXPECT_EQ(p.sealed_at(), 1019);
  EXPECT_TRUE(s.short_term_cache().empty());
  EXPECT_EQ(s.partition_count(), 1u);
}

TEST(UserState, SingleIngestOnlyAppends) {
  UserState s("u");
  s.ingest(make("u", 0), PartitionConfig{20});
  EXPECT_EQ(s.short_term_cache().size(), 1u);
  EXPECT_EQ(s.partition_count(), 0u);
}

TEST(UserState, FortyFiveBehaviors) {
  UserState s("u");
  for (int i = 0; i < 45; ++i) s.ingest(make("u", i), PartitionConfig{20});
  EXPECT_EQ(s.partition_count(), 2u);
  EXPECT_EQ(s.short_term_cache().size(), 5u);
  EXPECT_EQ(s.partitions()[0].index(), 1u);
  EXPECT_EQ(s.partitions()[1].index(), 2u);
}

TEST(UserState, RejectsForeignUser) {
  UserState s("u");
  EXPECT_THROW(s.ingest(make("v", 0), PartitionConfig{20}), IdentityError);
  EXPECT_TRUE(s.short_term_cache().empty());
}

TEST(UserState, RejectsInvalidBehavior) {
  UserState s("u");
  auto b = make("u", 0);
  b.title.clear();
  EXPECT_THROW(s.ingest(b, PartitionConfig{20}), PreconditionError);
  b = make("u", 0);
  b.timestamp = -1;
  EXPECT_THROW(s.ingest(b, PartitionConfig{20}), PreconditionError);
  b = make("u", 0);
  b.rating = 6;
  EXPECT_THROW(s.ingest(b, PartitionConfig{20}), PreconditionError);
}

TEST(UserState, AcceptsMissingRating) {
  UserState s("u");
  auto b = make("u", 0);
  b.rating.reset();
  EXPECT_NO_THROW(s.ingest(b, PartitionConfig{20}));
}

TEST(UserState, RejectsOutOfOrderTimestamps) {
  UserState s("u");
  s.ingest(make("u", 5), PartitionConfig{20});
  EXPECT_THROW(s.ingest(make("u", 4), PartitionConfig{20}), PreconditionError);
}

TEST(UserState, EqualTimestampsKeepArrivalOrder) {
  UserState s("u");
  auto a = make("u", 0);
  auto b = make("u", 1);
  b.timestamp = a.timestamp;
  s.ingest(a, PartitionConfig{2});
  auto out = s.ingest(b, PartitionConfig{2});
  const auto& p = std::get<PartitionSealed>(out).partition;
  EXPECT_EQ(p.behaviors()[0].item_id, "item0");
  EXPECT_EQ(p.behaviors()[1].item_id, "item1");
}

TEST(SealPartition, MovesWholeCache) {
  UserState s("u");
  for (int i = 0; i < 40; ++i) s.ingest(make("u", i), PartitionConfig{20});
  for (int i = 40; i < 60; ++i) s.ingest(make("u", i), PartitionConfig{1000});
  const auto& p = s.seal_partition();
  EXPECT_EQ(p.index(), 3u);
  EXPECT_EQ(p.size(), 20u);
  EXPECT_TRUE(s.short_term_cache().empty());
  EXPECT_EQ(s.partition_count(), 3u);
}

TEST(SealPartition, SingleBehaviorFlush) {
  UserState s("u");
  s.ingest(make("u", 0), PartitionConfig{20});
  EXPECT_EQ(s.seal_partition().size(), 1u);
}

TEST(SealPartition, EmptyCacheIsAnError) {
  UserState s("u");
  EXPECT_THROW(s.seal_partition(), DegenerateInputError);
}

TEST(Partition, ImmutableView) {
  static_assert(std::is_same_v<decltype(std::declval<const Partition&>().behaviors()),
                               std::span<const Behavior>>);
  static_assert(std::is_same_v<decltype(std::declval<UserState&>().partitions()),
                               std::span<const Partition>>);
  EXPECT_THROW(Partition(1, {}, 0), DegenerateInputError);
  EXPECT_THROW(Partition(0, cache_of(1), 0), PreconditionError);
}

namespace {

class EveryThird final : public PartitionCondition {
 public:
  bool should_seal(std::span<const Behavior> cache) const override {
    return cache.back().timestamp % 3 == 0;
  }
};

}  // namespace

TEST(UserState, PluggableCondition) {
  UserState s("u");
  EveryThird cond;
  for (int i = 1; i <= 9; ++i) s.ingest(make("u", i), cond);
  // timestamps 1001..1009; 1002, 1005, 1008 are multiples of 3
  EXPECT_EQ(s.partition_count(), 3u);
  EXPECT_EQ(s.short_term_cache().size(), 1u);
}

TEST(UserState, ArithmeticAndLosslessOverRandomStreams) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 300)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    UserState s("u");
    std::vector<Behavior> input;
    for (std::size_t i = 0; i < n; ++i) {
      input.push_back(make("u", static_cast<int>(i)));
      s.ingest(input.back(), PartitionConfig{k});
    }
    ASSERT_EQ(s.partition_count(), n / k);
    ASSERT_EQ(s.short_term_cache().size(), n % k);
    std::vector<Behavior> rebuilt;
    for (const auto& p : s.partitions()) {
      ASSERT_EQ(p.index(), rebuilt.size() / k + 1);
      rebuilt.insert(rebuilt.end(), p.behaviors().begin(), p.behaviors().end());
    }
    rebuilt.insert(rebuilt.end(), s.short_term_cache().begin(), s.short_term_cache().end());
    ASSERT_EQ(rebuilt, input);
  }
}

TEST(UserState, DeterministicReplay) {
  UserState a("u"), b("u");
  for (int i = 0; i < 73; ++i) {
    a.ingest(make("u", i), PartitionConfig{20});
    b.ingest(make("u", i), PartitionConfig{20});
  }
  EXPECT_EQ(a, b);
}
