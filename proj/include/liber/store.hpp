#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "liber/encoding.hpp"

namespace liber {

struct StoredRecord {
  std::string user_id;
  std::uint32_t partition_index = 0;
  VectorStage stage = VectorStage::reduced;
  Vector values;
  std::string summary;
  std::optional<std::string> shift;

  bool operator==(const StoredRecord& other) const;
};

// Append-only (user, partition, stage) -> vector + knowledge texts.
//
// Record layout, all integers little-endian:
//   [record_len u32][user_id_len u32][user_id bytes][partition_index u32]
//   [stage u8][dim u32][dim x f64][summary_len u32][summary bytes]
//   [shift_len u32][shift bytes]
// record_len counts the bytes after itself. A shift length of 0 means the
// shift is absent. A truncated trailing record (torn write) is discarded on
// open.
class RepresentationStore {
 public:
  // In-memory only.
  RepresentationStore() = default;
  // Opens (creating if needed) and indexes an existing file.
  explicit RepresentationStore(std::string path);

  RepresentationStore(const RepresentationStore&) = delete;
  RepresentationStore& operator=(const RepresentationStore&) = delete;

  bool contains(const std::string& user_id, std::uint32_t partition_index,
                VectorStage stage = VectorStage::reduced) const;
  std::optional<StoredRecord> find(const std::string& user_id, std::uint32_t partition_index,
                                   VectorStage stage = VectorStage::reduced) const;
  // Records of one user and stage, ordered by partition index.
  std::vector<StoredRecord> user_records(const std::string& user_id,
                                         VectorStage stage = VectorStage::reduced) const;
  std::vector<std::string> users() const;

  // Throws StoreError when the key already exists.
  void append(const StoredRecord& record);

  std::size_t size() const;
  // Appends performed through this handle.
  std::size_t write_count() const;
  const std::string& path() const noexcept { return path_; }

  static std::vector<std::uint8_t> encode(const StoredRecord& record);

 private:
  using Key = std::tuple<std::string, std::uint32_t, std::uint8_t>;

  std::string path_;
  mutable std::mutex mu_;
  std::map<Key, StoredRecord> index_;
  std::ofstream out_;
  std::size_t writes_ = 0;
};

}  // namespace liber
