#include "liber/synthetic.hpp"

#include <array>
#include <random>

#include "liber/errors.hpp"

namespace liber {
namespace {

constexpr std::array<const char*, 8> kTopics = {"sports", "jazz",    "cooking", "travel",
                                               "science", "history", "comedy",  "horror"};
constexpr std::array<const char*, 4> kPeriods = {"1980s", "1990s", "2000s", "2010s"};
constexpr std::int64_t kEpoch = 1'000'000'000;
constexpr std::int64_t kStep = 3600;

}  // namespace

std::string synthetic_topic_name(std::size_t topic) {
  return topic < kTopics.size() ? kTopics[topic] : "topic" + std::to_string(topic);
}

SyntheticDataset generate_synthetic_stream(const SyntheticConfig& config) {
  if (config.topics < 2) throw ConfigError("synthetic generator needs at least 2 topics");
  if (config.items_per_topic < 1) throw ConfigError("items_per_topic must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> topic_dist(0, config.topics - 1);
  std::uniform_int_distribution<std::size_t> other_dist(1, config.topics - 1);
  std::uniform_int_distribution<std::size_t> item_dist(0, config.items_per_topic - 1);
  std::uniform_int_distribution<int> negative_rating(1, 3);
  std::uniform_int_distribution<int> positive_rating(4, 5);
  std::bernoulli_distribution biased(config.exposure_bias);

  SyntheticDataset out;
  for (std::size_t t = 0; t < config.topics; ++t) out.topic_names.push_back(synthetic_topic_name(t));

  const std::size_t drift = config.behaviors_per_user / 2;
  for (std::size_t u = 0; u < config.users; ++u) {
    SyntheticUser user;
    user.user_id = "u" + std::to_string(u);
    const std::size_t first = topic_dist(rng);
    const std::size_t second = (first + other_dist(rng)) % config.topics;
    user.initial_topic = out.topic_names[first];
    user.drifted_topic = out.topic_names[second];
    user.drift_index = drift;

    for (std::size_t i = 0; i < config.behaviors_per_user; ++i) {
      const std::size_t current = i < drift ? first : second;
      const std::size_t topic = biased(rng) ? current : topic_dist(rng);
      const std::size_t item = item_dist(rng);
      const double p = topic == current ? config.match_click_rate : config.mismatch_click_rate;
      const bool click = std::bernoulli_distribution(p)(rng);

      const std::string& name = out.topic_names[topic];
      Behavior b;
      b.user_id = user.user_id;
      b.item_id = name + "-" + std::to_string(item);
      b.title = "The " + name + " collection no. " + std::to_string(item + 1);
      b.attributes = {{"topic", name},
                      {"director", "director-" + name + "-" + std::to_string(item % 5)},
                      {"period", kPeriods[item % kPeriods.size()]}};
      b.rating = click ? positive_rating(rng) : negative_rating(rng);
      b.timestamp = kEpoch + static_cast<std::int64_t>(i) * kStep + static_cast<std::int64_t>(u);
      out.dataset.records.push_back({std::move(b), click ? 1 : 0});
    }
    out.users.push_back(std::move(user));
  }
  out.dataset.attribute_names = {"topic", "director", "period"};
  finalize(out.dataset);
  return out;
}

}  // namespace liber
