#include "liber/mock_clients.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace liber {
namespace {

constexpr std::string_view kMain = "main_interest=";

std::string read_token(const std::string& text, std::size_t pos) {
  const auto end = text.find_first_of(" \t\n|,;", pos);
  return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::optional<int> line_rating(const std::string& line) {
  const auto pos = line.find("rating:");
  if (pos == std::string::npos) return std::nullopt;
  try {
    return std::stoi(line.substr(pos + 7));
  } catch (...) {
    return std::nullopt;
  }
}

std::string summarize(const std::string& prompt, const std::string& tag_key) {
  const std::string tag = tag_key + ":";
  std::map<std::string, std::size_t> liked, seen;
  std::map<std::string, std::size_t> first_seen;
  std::istringstream in(prompt);
  std::string line;
  std::size_t order = 0;
  while (std::getline(in, line)) {
    const auto pos = line.find(tag);
    if (pos == std::string::npos) continue;
    const std::string value = read_token(line, pos + tag.size());
    if (value.empty()) continue;
    first_seen.emplace(value, order++);
    ++seen[value];
    const auto rating = line_rating(line);
    if (!rating || *rating > 3) ++liked[value];
  }
  if (seen.empty()) return "Interest summary: main_interest=unknown";
  const auto& counts = liked.empty() ? seen : liked;
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return first_seen[a.first] < first_seen[b.first];
  });
  std::string out = "Interest summary: main_interest=" + ranked[0].first;
  if (ranked.size() > 1) out += " secondary_interest=" + ranked[1].first;
  return out;
}

std::string shift(const std::string& prompt, std::size_t first) {
  const auto second = prompt.find(kMain, first + kMain.size());
  const std::string previous = read_token(prompt, first + kMain.size());
  const std::string current = read_token(prompt, second + kMain.size());
  if (previous == current) return "Interest shift: stable_interest=" + current;
  return "Interest shift: new_interest=" + current + " obsolescent_interest=" + previous;
}

}  // namespace

MockChatClient::MockChatClient(std::string tag_key) : tag_key_(std::move(tag_key)) {}

std::string MockChatClient::complete(const std::string& prompt) {
  const auto first = prompt.find(kMain);
  if (first != std::string::npos &&
      prompt.find(kMain, first + kMain.size()) != std::string::npos) {
    return shift(prompt, first);
  }
  return summarize(prompt, tag_key_);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

MockEmbedClient::MockEmbedClient(std::size_t dimension) : dimension_(dimension) {}

Vector MockEmbedClient::token_vector(std::string_view token) const {
  std::mt19937_64 rng(fnv1a64(token));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dimension_));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v / v.norm();
}

std::vector<Vector> MockEmbedClient::embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(dimension_));
    std::istringstream in(text);
    std::string token;
    std::size_t n = 0;
    while (in >> token) {
      sum += token_vector(token);
      ++n;
    }
    out.push_back(n == 0 ? sum : Vector(sum / static_cast<double>(n)));
  }
  return out;
}

}  // namespace liber
