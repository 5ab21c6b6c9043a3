#include <gtest/gtest.h>

#include <fstream>

#include "liber/dataset.hpp"
#include "liber/errors.hpp"
#include "support/temp_dir.hpp"

using namespace liber;

namespace {

std::string write(testing_support::TempDir& dir, const std::string& name,
                  const std::string& text) {
  const auto path = dir.file(name);
  std::ofstream(path) << text;
  return path;
}

std::string error_of(const std::string& path) {
  try {
    load_interactions(path);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

const char* kTsv =
    "user_id\titem_id\trating\ttimestamp\ttitle\tgenre\n"
    "u1\tm1\t5\t30\tAlien\tscifi\n"
    "u1\tm2\t2\t10\tHeat\tcrime\n"
    "u2\tm1\t3\t20\tAlien\tscifi\n";

}  // namespace

TEST(LabelRule, ThresholdAndPositiveOnly) {
  LabelRule rule;
  EXPECT_EQ(rule.label(4), 1);
  EXPECT_EQ(rule.label(3), 0);
  rule.positive_only_rating = 5;
  EXPECT_EQ(rule.label(5), 1);
  EXPECT_EQ(rule.label(4), 0);
}

TEST(Dataset, LoadsTsvSortedByTime) {
  testing_support::TempDir dir;
  const auto ds = load_interactions(write(dir, "a.tsv", kTsv));
  ASSERT_EQ(ds.records.size(), 3u);
  EXPECT_EQ(ds.records[0].behavior.title, "Heat");
  EXPECT_EQ(ds.records[0].label, 0);
  EXPECT_EQ(ds.records[2].label, 1);
  EXPECT_EQ(ds.attribute_names, (std::vector<std::string>{"genre"}));
  EXPECT_EQ(ds.factors.factors, (std::vector<std::string>{"genre"}));
  EXPECT_EQ(ds.records[2].behavior.attributes, (Attributes{{"genre", "scifi"}}));
  EXPECT_EQ(ds.users(), (std::vector<std::string>{"u1", "u2"}));
  EXPECT_EQ(ds.by_user().at("u1"), (std::vector<std::size_t>{0, 2}));
}

TEST(Dataset, LoadsJsonLines) {
  testing_support::TempDir dir;
  const auto path = write(dir, "a.jsonl",
                          R"({"user_id":"u1","item_id":"b1","rating":5,"timestamp":2,"title":"Dune","attributes":{"author":"Herbert"}})"
                          "\n"
                          R"({"user_id":"u1","item_id":"b2","rating":1,"timestamp":1,"title":"Emma"})"
                          "\n");
  LoadOptions o;
  o.labels.positive_only_rating = 5;
  const auto ds = load_interactions(path, o);
  ASSERT_EQ(ds.records.size(), 2u);
  EXPECT_EQ(ds.records[0].behavior.title, "Emma");
  EXPECT_EQ(ds.records[1].label, 1);
  EXPECT_EQ(ds.records[1].behavior.attributes, (Attributes{{"author", "Herbert"}}));
}

TEST(Dataset, EmptyFileRejected) {
  testing_support::TempDir dir;
  EXPECT_THROW(load_interactions(write(dir, "e.tsv", "")), DataError);
  EXPECT_THROW(load_interactions(write(dir, "h.tsv", "user_id\titem_id\trating\ttimestamp\ttitle\n")),
               DataError);
  EXPECT_THROW(load_interactions(dir.file("missing.tsv")), DataError);
}

TEST(Dataset, MalformedLineNamesLine) {
  testing_support::TempDir dir;
  std::string bad = kTsv;
  bad += "u3\tm4\tfive\t40\tX\tdrama\n";
  EXPECT_NE(error_of(write(dir, "b.tsv", bad)).find("line 5"), std::string::npos);
  EXPECT_NE(error_of(write(dir, "c.tsv", "user_id\titem_id\ttimestamp\ttitle\nu\ti\t1\tt\n"))
                .find("rating"),
            std::string::npos);
  EXPECT_NE(error_of(write(dir, "d.jsonl", "{\"user_id\":\"u\"}\n{oops\n")).find("line 1"),
            std::string::npos);
}

TEST(Dataset, OutOfRangeRatingRejected) {
  testing_support::TempDir dir;
  EXPECT_THROW(load_interactions(write(dir, "r.tsv",
                                       "user_id\titem_id\trating\ttimestamp\ttitle\nu\ti\t9\t1\tt\n")),
               DataError);
}

TEST(Dataset, MinInteractionsFilter) {
  testing_support::TempDir dir;
  LoadOptions o;
  o.min_interactions = 2;
  std::string text = kTsv;
  text += "u2\tm1\t4\t40\tAlien\tscifi\n";
  const auto ds = load_interactions(write(dir, "m.tsv", text), o);
  // m2 has one interaction; every remaining row involves m1.
  for (const auto& r : ds.records) EXPECT_EQ(r.behavior.item_id, "m1");
  EXPECT_EQ(ds.records.size(), 3u);
}

TEST(Dataset, ProfilesAndFactors) {
  testing_support::TempDir dir;
  LoadOptions o;
  o.profiles_path = write(dir, "p.tsv", "u1\tlikes old films\n");
  o.factors = {"genre", "decade"};
  const auto ds = load_interactions(write(dir, "a.tsv", kTsv), o);
  EXPECT_EQ(ds.profile("u1").description, "likes old films");
  EXPECT_EQ(ds.profile("u2").description, "");
  EXPECT_EQ(ds.factors.factors, o.factors);
}

TEST(Dataset, SaveTsvRoundTrip) {
  testing_support::TempDir dir;
  const auto ds = load_interactions(write(dir, "a.tsv", kTsv));
  save_tsv(ds, dir.file("b.tsv"));
  const auto again = load_interactions(dir.file("b.tsv"));
  ASSERT_EQ(again.records.size(), ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    EXPECT_EQ(again.records[i].behavior, ds.records[i].behavior);
  }
}

TEST(Split, NinetyTen) {
  Dataset ds;
  for (int i = 0; i < 100; ++i) {
    Behavior b{"u" + std::to_string(i % 4), "i", "t", {}, 4, 100 - i};
    ds.records.push_back({b, 1});
  }
  finalize(ds);
  const auto split = split_by_time(ds, 0.9);
  ASSERT_EQ(split.train.records.size(), 90u);
  ASSERT_EQ(split.test.records.size(), 10u);
  EXPECT_LE(split.train.records.back().behavior.timestamp,
            split.test.records.front().behavior.timestamp);
  EXPECT_THROW(split_by_time(ds, 1.0), ConfigError);
  EXPECT_THROW(split_by_time(ds, 0.001), ConfigError);
}
