#include "liber/behavior_stream.hpp"

#include "liber/errors.hpp"

namespace liber {

void validate(const Behavior& behavior) {
  if (behavior.timestamp < 0) {
    throw PreconditionError("behavior timestamp must be non-negative (item " +
                            behavior.item_id + ")");
  }
  if (behavior.title.empty()) {
    throw PreconditionError("behavior title must be non-empty (item " +
                            behavior.item_id + ")");
  }
  if (behavior.rating && (*behavior.rating < 1 || *behavior.rating > 5)) {
    throw PreconditionError("rating must be in 1..5 (item " +
                            behavior.item_id + ")");
  }
}

Partition::Partition(std::uint32_t index, std::vector<Behavior> behaviors,
                     std::int64_t sealed_at)
    : index_(index), behaviors_(std::move(behaviors)), sealed_at_(sealed_at) {
  if (index_ == 0) throw PreconditionError("partition index starts at 1");
  if (behaviors_.empty()) {
    throw DegenerateInputError("a partition must hold at least one behavior");
  }
}

void validate(const PartitionConfig& config) {
  if (config.k < 1) throw ConfigError("partition size K must be >= 1");
}

LengthCondition::LengthCondition(PartitionConfig config) : config_(config) {
  validate(config_);
}

bool LengthCondition::should_seal(std::span<const Behavior> cache) const {
  return cache.size() >= config_.k;
}

bool check_partition_condition(std::span<const Behavior> cache,
                               const PartitionConfig& config) {
  return LengthCondition(config).should_seal(cache);
}

UserState::UserState(std::string user_id) : user_id_(std::move(user_id)) {}

IngestOutcome UserState::ingest(Behavior behavior,
                                const PartitionConfig& config) {
  return ingest(std::move(behavior), LengthCondition(config));
}

IngestOutcome UserState::ingest(Behavior behavior,
                                const PartitionCondition& condition) {
  if (behavior.user_id != user_id_) {
    throw IdentityError("behavior for user '" + behavior.user_id +
                        "' routed to state of user '" + user_id_ + "'");
  }
  validate(behavior);
  if (last_timestamp_ && behavior.timestamp < *last_timestamp_) {
    throw PreconditionError("behaviors of user '" + user_id_ +
                            "' must arrive in timestamp order");
  }
  last_timestamp_ = behavior.timestamp;
  cache_.push_back(std::move(behavior));
  if (condition.should_seal(cache_)) {
    return PartitionSealed{seal_partition()};
  }
  return CacheAppended{cache_.size()};
}

const Partition& UserState::seal_partition() {
  if (cache_.empty()) {
    throw DegenerateInputError("cannot seal an empty short-term cache of user '" +
                               user_id_ + "'");
  }
  const auto sealed_at = cache_.back().timestamp;
  const auto index = static_cast<std::uint32_t>(partitions_.size() + 1);
  std::vector<Behavior> moved;
  moved.swap(cache_);
  partitions_.emplace_back(index, std::move(moved), sealed_at);
  return partitions_.back();
}

}  // namespace liber
