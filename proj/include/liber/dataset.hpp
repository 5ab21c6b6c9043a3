#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liber/behavior_stream.hpp"
#include "liber/prompting.hpp"

namespace liber {

struct InteractionRecord {
  Behavior behavior;
  int label = 0;
};

// rating > threshold is positive, or rating == positive_only_rating when set.
struct LabelRule {
  int threshold = 3;
  std::optional<int> positive_only_rating;

  int label(int rating) const;
};

struct Dataset {
  // Sorted by (timestamp, input order).
  std::vector<InteractionRecord> records;
  std::vector<std::string> attribute_names;
  DatasetFactors factors;
  std::map<std::string, std::string> profiles;  // user_id -> description

  // Users in lexicographic order.
  std::vector<std::string> users() const;
  // Record indices per user, in stream order.
  std::map<std::string, std::vector<std::size_t>> by_user() const;
  UserProfile profile(const std::string& user_id) const;
};

struct LoadOptions {
  LabelRule labels;
  // Drops users and items with fewer interactions; 0 keeps everything.
  std::size_t min_interactions = 0;
  // Overrides the default factors (the attribute column names).
  std::vector<std::string> factors;
  std::string profiles_path;
};

// Tab-separated with a header row, or JSON lines (one object per line).
// Required columns/keys: user_id, item_id, rating, timestamp, title. Every
// other TSV column is an item attribute named by its header; JSON lines
// carry attributes under an "attributes" object.
// Throws DataError (with the line number) on malformed input or empty files.
Dataset load_interactions(const std::string& path, const LoadOptions& options = {});

// user_id <TAB> description, no header.
std::map<std::string, std::string> load_profiles(const std::string& path);

void save_tsv(const Dataset& dataset, const std::string& path);

// Sorts by (timestamp, input order), fills attribute_names and default factors.
void finalize(Dataset& dataset);

struct TimeSplit {
  Dataset train;
  Dataset test;
};

// The first floor(ratio * n) records by global timestamp train; the rest test.
TimeSplit split_by_time(const Dataset& dataset, double ratio);

}  // namespace liber
