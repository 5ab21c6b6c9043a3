#include "liber/store.hpp"

#include <filesystem>

#include "liber/binary_io.hpp"
#include "liber/errors.hpp"

namespace liber {
namespace {

StoredRecord decode_body(ByteReader& r) {
  StoredRecord rec;
  rec.user_id = r.str();
  rec.partition_index = r.u32();
  const auto stage = r.u8();
  if (stage > 1) throw DataError("unknown vector stage in store record");
  rec.stage = static_cast<VectorStage>(stage);
  const auto dim = r.u32();
  rec.values.resize(dim);
  r.f64s(std::span<double>(rec.values.data(), dim));
  rec.summary = r.str();
  auto shift = r.str();
  if (!shift.empty()) rec.shift = std::move(shift);
  return rec;
}

}  // namespace

bool StoredRecord::operator==(const StoredRecord& o) const {
  return user_id == o.user_id && partition_index == o.partition_index && stage == o.stage &&
         values.size() == o.values.size() && values == o.values && summary == o.summary &&
         shift == o.shift;
}

std::vector<std::uint8_t> RepresentationStore::encode(const StoredRecord& record) {
  ByteWriter body;
  body.str(record.user_id);
  body.u32(record.partition_index);
  body.u8(static_cast<std::uint8_t>(record.stage));
  body.u32(static_cast<std::uint32_t>(record.values.size()));
  body.f64s(std::span<const double>(record.values.data(),
                                    static_cast<std::size_t>(record.values.size())));
  body.str(record.summary);
  body.str(record.shift.value_or(std::string{}));
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(body.bytes().size()));
  const auto& b = body.bytes();
  out.raw(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
  return out.take();
}

RepresentationStore::RepresentationStore(std::string path) : path_(std::move(path)) {
  std::size_t good = 0;
  if (std::filesystem::exists(path_)) {
    const auto bytes = read_file(path_);
    ByteReader r(bytes);
    while (r.remaining() >= 4) {
      const auto len = r.u32();
      if (r.remaining() < len) break;
      const auto body = r.raw(len);
      ByteReader br(std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
      StoredRecord rec = decode_body(br);
      if (br.remaining() != 0) throw DataError("malformed store record in " + path_);
      Key key{rec.user_id, rec.partition_index, static_cast<std::uint8_t>(rec.stage)};
      if (!index_.emplace(std::move(key), std::move(rec)).second) {
        throw DataError("duplicate key in store " + path_);
      }
      good = r.position();
    }
    if (good != bytes.size()) std::filesystem::resize_file(path_, good);
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw StoreError("cannot open store " + path_ + " for appending");
}

bool RepresentationStore::contains(const std::string& user_id, std::uint32_t partition_index,
                                   VectorStage stage) const {
  std::lock_guard lock(mu_);
  return index_.contains(Key{user_id, partition_index, static_cast<std::uint8_t>(stage)});
}

std::optional<StoredRecord> RepresentationStore::find(const std::string& user_id,
                                                      std::uint32_t partition_index,
                                                      VectorStage stage) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(Key{user_id, partition_index, static_cast<std::uint8_t>(stage)});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<StoredRecord> RepresentationStore::user_records(const std::string& user_id,
                                                            VectorStage stage) const {
  std::lock_guard lock(mu_);
  std::vector<StoredRecord> out;
  for (auto it = index_.lower_bound(Key{user_id, 0, 0});
       it != index_.end() && std::get<0>(it->first) == user_id; ++it) {
    if (it->second.stage == stage) out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> RepresentationStore::users() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [key, rec] : index_) {
    if (out.empty() || out.back() != std::get<0>(key)) out.push_back(std::get<0>(key));
  }
  return out;
}

void RepresentationStore::append(const StoredRecord& record) {
  if (!record.values.allFinite()) throw StoreError("refusing to store non-finite values");
  std::lock_guard lock(mu_);
  Key key{record.user_id, record.partition_index, static_cast<std::uint8_t>(record.stage)};
  if (index_.contains(key)) {
    throw StoreError("store key (" + record.user_id + ", " +
                     std::to_string(record.partition_index) + ") is already written");
  }
  if (out_.is_open()) {
    const auto bytes = encode(record);
    out_.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    out_.flush();
    if (!out_) throw StoreError("write to " + path_ + " failed");
  }
  index_.emplace(std::move(key), record);
  ++writes_;
}

std::size_t RepresentationStore::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

std::size_t RepresentationStore::write_count() const {
  std::lock_guard lock(mu_);
  return writes_;
}

}  // namespace liber
