#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace liber {

using Attributes = std::vector<std::pair<std::string, std::string>>;

// One timestamped user-item interaction.
struct Behavior {
  std::string user_id;
  std::string item_id;
  std::string title;
  Attributes attributes;
  std::optional<int> rating;
  std::int64_t timestamp = 0;

  bool operator==(const Behavior&) const = default;
};

// Throws PreconditionError when timestamp < 0, title is empty or rating is
// outside 1..5.
void validate(const Behavior& behavior);

// An immutable, non-empty run of behaviors sealed out of the short-term cache.
class Partition {
 public:
  Partition(std::uint32_t index, std::vector<Behavior> behaviors,
            std::int64_t sealed_at);

  std::uint32_t index() const noexcept { return index_; }
  std::span<const Behavior> behaviors() const noexcept { return behaviors_; }
  std::size_t size() const noexcept { return behaviors_.size(); }
  std::int64_t sealed_at() const noexcept { return sealed_at_; }

  bool operator==(const Partition&) const = default;

 private:
  std::uint32_t index_;
  std::vector<Behavior> behaviors_;
  std::int64_t sealed_at_;
};

struct PartitionConfig {
  // Balance coefficient: the cache is sealed once it holds K behaviors.
  std::size_t k = 20;
};

void validate(const PartitionConfig& config);

// Decides when the short-term cache becomes a partition.
class PartitionCondition {
 public:
  virtual ~PartitionCondition() = default;
  virtual bool should_seal(std::span<const Behavior> cache) const = 0;
};

// Len(cache) >= K.
class LengthCondition final : public PartitionCondition {
 public:
  explicit LengthCondition(PartitionConfig config);
  bool should_seal(std::span<const Behavior> cache) const override;

 private:
  PartitionConfig config_;
};

bool check_partition_condition(std::span<const Behavior> cache,
                               const PartitionConfig& config);

struct CacheAppended {
  std::size_t cache_size = 0;
};

struct PartitionSealed {
  Partition partition;
};

using IngestOutcome = std::variant<CacheAppended, PartitionSealed>;

// Short-term cache plus the ordered long-term partition memory of one user.
// Single writer: callers serialize ingest() per user.
class UserState {
 public:
  explicit UserState(std::string user_id);

  const std::string& user_id() const noexcept { return user_id_; }
  std::span<const Behavior> short_term_cache() const noexcept { return cache_; }
  std::span<const Partition> partitions() const noexcept { return partitions_; }
  std::size_t partition_count() const noexcept { return partitions_.size(); }

  // Appends to the cache and seals it when the length condition holds.
  IngestOutcome ingest(Behavior behavior, const PartitionConfig& config);
  IngestOutcome ingest(Behavior behavior, const PartitionCondition& condition);

  // Moves the whole cache into partition partition_count()+1. Used by the
  // condition path and by explicit end-of-stream flushes.
  const Partition& seal_partition();

  bool operator==(const UserState&) const = default;

 private:
  std::string user_id_;
  std::vector<Behavior> cache_;
  std::vector<Partition> partitions_;
  std::optional<std::int64_t> last_timestamp_;
};

}  // namespace liber
