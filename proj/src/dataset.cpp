#include "liber/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "liber/errors.hpp"

namespace liber {
namespace {

const std::vector<std::string> kRequired = {"user_id", "item_id", "rating", "timestamp", "title"};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what, std::size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("line " + std::to_string(line) + ": invalid " + what + " '" + text + "'");
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

InteractionRecord make_record(Behavior b, std::size_t line, const LabelRule& rule) {
  try {
    validate(b);
  } catch (const PreconditionError& e) {
    throw DataError("line " + std::to_string(line) + ": " + e.what());
  }
  if (!b.rating) throw DataError("line " + std::to_string(line) + ": missing rating");
  const int label = rule.label(*b.rating);
  return {std::move(b), label};
}

Dataset parse_tsv(std::istream& in, const LabelRule& rule) {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file");
  strip_cr(line);
  const auto header = split_tabs(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) {
      throw DataError("line 1: duplicate column '" + header[i] + "'");
    }
  }
  for (const auto& r : kRequired) {
    if (!col.contains(r)) throw DataError("line 1: missing required column '" + r + "'");
  }
  std::vector<std::size_t> attribute_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (std::find(kRequired.begin(), kRequired.end(), header[i]) == kRequired.end()) {
      attribute_cols.push_back(i);
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    Behavior b;
    b.user_id = cells[col["user_id"]];
    b.item_id = cells[col["item_id"]];
    b.title = cells[col["title"]];
    b.rating = parse_number<int>(cells[col["rating"]], "rating", line_no);
    b.timestamp = parse_number<std::int64_t>(cells[col["timestamp"]], "timestamp", line_no);
    if (b.user_id.empty() || b.item_id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty user or item id");
    }
    for (auto c : attribute_cols) b.attributes.emplace_back(header[c], cells[c]);
    ds.records.push_back(make_record(std::move(b), line_no, rule));
  }
  return ds;
}

std::string json_id(const nlohmann::ordered_json& v, const char* key, std::size_t line) {
  if (!v.contains(key)) {
    throw DataError("line " + std::to_string(line) + ": missing key '" + key + "'");
  }
  const auto& x = v.at(key);
  if (x.is_string()) return x.get<std::string>();
  if (x.is_number_integer()) return std::to_string(x.get<long long>());
  throw DataError("line " + std::to_string(line) + ": key '" + key + "' must be a string");
}

Dataset parse_jsonl(std::istream& in, const LabelRule& rule) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::ordered_json obj;
    try {
      obj = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw DataError("line " + std::to_string(line_no) + ": not an object");
    try {
      Behavior b;
      b.user_id = json_id(obj, "user_id", line_no);
      b.item_id = json_id(obj, "item_id", line_no);
      b.title = json_id(obj, "title", line_no);
      if (!obj.contains("rating") || !obj["rating"].is_number()) {
        throw DataError("line " + std::to_string(line_no) + ": missing numeric rating");
      }
      const double rating = obj["rating"].get<double>();
      if (rating != std::floor(rating)) {
        throw DataError("line " + std::to_string(line_no) + ": rating must be an integer");
      }
      b.rating = static_cast<int>(rating);
      if (!obj.contains("timestamp") || !obj["timestamp"].is_number_integer()) {
        throw DataError("line " + std::to_string(line_no) + ": missing integer timestamp");
      }
      b.timestamp = obj["timestamp"].get<std::int64_t>();
      if (obj.contains("attributes")) {
        const auto& attrs = obj["attributes"];
        if (!attrs.is_object()) {
          throw DataError("line " + std::to_string(line_no) + ": attributes must be an object");
        }
        for (const auto& [k, v] : attrs.items()) {
          b.attributes.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
        }
      }
      ds.records.push_back(make_record(std::move(b), line_no, rule));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) throw DataError("empty dataset file");
  return ds;
}

void filter_min_interactions(Dataset& ds, std::size_t min_count) {
  if (min_count == 0) return;
  std::map<std::string, std::size_t> users, items;
  for (const auto& r : ds.records) {
    ++users[r.behavior.user_id];
    ++items[r.behavior.item_id];
  }
  std::erase_if(ds.records, [&](const InteractionRecord& r) {
    return users[r.behavior.user_id] < min_count || items[r.behavior.item_id] < min_count;
  });
}

}  // namespace

int LabelRule::label(int rating) const {
  if (positive_only_rating) return rating == *positive_only_rating ? 1 : 0;
  return rating > threshold ? 1 : 0;
}

std::vector<std::string> Dataset::users() const {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.behavior.user_id);
  return {s.begin(), s.end()};
}

std::map<std::string, std::vector<std::size_t>> Dataset::by_user() const {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < records.size(); ++i) out[records[i].behavior.user_id].push_back(i);
  return out;
}

UserProfile Dataset::profile(const std::string& user_id) const {
  auto it = profiles.find(user_id);
  return {user_id, it == profiles.end() ? std::string{} : it->second};
}

void finalize(Dataset& ds) {
  std::stable_sort(ds.records.begin(), ds.records.end(),
                   [](const InteractionRecord& a, const InteractionRecord& b) {
                     return a.behavior.timestamp < b.behavior.timestamp;
                   });
  if (ds.attribute_names.empty()) {
    for (const auto& r : ds.records) {
      for (const auto& [name, value] : r.behavior.attributes) {
        if (std::find(ds.attribute_names.begin(), ds.attribute_names.end(), name) ==
            ds.attribute_names.end()) {
          ds.attribute_names.push_back(name);
        }
      }
    }
  }
  if (ds.factors.factors.empty()) {
    ds.factors.factors = ds.attribute_names.empty() ? std::vector<std::string>{"title"}
                                                    : ds.attribute_names;
  }
}

Dataset load_interactions(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  // Sniff the first non-blank character: '{' means JSON lines.
  char first = 0;
  while (in.get(first) && std::isspace(static_cast<unsigned char>(first))) {
  }
  if (!in) throw DataError("empty dataset file " + path);
  in.clear();
  in.seekg(0);
  Dataset ds = first == '{' ? parse_jsonl(in, options.labels) : parse_tsv(in, options.labels);
  if (ds.records.empty()) throw DataError("dataset " + path + " has no records");
  filter_min_interactions(ds, options.min_interactions);
  if (ds.records.empty()) throw DataError("no records left after --min-interactions filter");
  if (!options.factors.empty()) ds.factors.factors = options.factors;
  if (!options.profiles_path.empty()) ds.profiles = load_profiles(options.profiles_path);
  finalize(ds);
  return ds;
}

std::map<std::string, std::string> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profiles " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("profiles line " + std::to_string(line_no) + ": expected user_id<TAB>text");
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

void save_tsv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << "user_id\titem_id\trating\ttimestamp\ttitle";
  for (const auto& a : ds.attribute_names) out << '\t' << a;
  out << '\n';
  for (const auto& r : ds.records) {
    const auto& b = r.behavior;
    out << b.user_id << '\t' << b.item_id << '\t' << b.rating.value_or(0) << '\t'
        << b.timestamp << '\t' << b.title;
    for (const auto& name : ds.attribute_names) {
      std::string value;
      for (const auto& [k, v] : b.attributes)
        if (k == name) value = v;
      out << '\t' << value;
    }
    out << '\n';
  }
  if (!out) throw DataError("short write to " + path);
}

TimeSplit split_by_time(const Dataset& dataset, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");
  const auto n = dataset.records.size();
  const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  if (cut == 0 || cut >= n) {
    throw ConfigError("split ratio " + std::to_string(ratio) + " leaves an empty side for " +
                      std::to_string(n) + " records");
  }
  TimeSplit s;
  s.train.attribute_names = s.test.attribute_names = dataset.attribute_names;
  s.train.factors = s.test.factors = dataset.factors;
  s.train.profiles = s.test.profiles = dataset.profiles;
  s.train.records.assign(dataset.records.begin(), dataset.records.begin() + cut);
  s.test.records.assign(dataset.records.begin() + cut, dataset.records.end());
  return s;
}

}  // namespace liber
