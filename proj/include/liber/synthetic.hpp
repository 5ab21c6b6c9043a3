#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "liber/dataset.hpp"

namespace liber {

struct SyntheticConfig {
  std::size_t users = 10;
  std::size_t behaviors_per_user = 180;
  std::size_t topics = 4;
  std::size_t items_per_topic = 25;
  std::uint64_t seed = 1;
  // Probability that an exposure comes from the current latent topic; the
  // rest is uniform over all topics.
  double exposure_bias = 0.0;
  double match_click_rate = 0.85;
  double mismatch_click_rate = 0.10;
};

struct SyntheticUser {
  std::string user_id;
  std::string initial_topic;
  std::string drifted_topic;
  std::size_t drift_index = 0;  // first behavior (0-based) under the drifted topic
};

struct SyntheticDataset {
  Dataset dataset;
  std::vector<SyntheticUser> users;
  std::vector<std::string> topic_names;
};

// Each user follows one latent topic and switches to a different one at the
// midpoint of the stream. Items are tagged with their topic; a behavior is
// positive with match_click_rate when the item topic equals the user's
// current topic and mismatch_click_rate otherwise. Ratings are 4-5 for
// positives and 1-3 for negatives, so the default label rule recovers labels.
// All users share one time axis, interleaved one hour apart.
SyntheticDataset generate_synthetic_stream(const SyntheticConfig& config);

std::string synthetic_topic_name(std::size_t topic);

}  // namespace liber
