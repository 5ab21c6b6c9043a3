#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "support/temp_dir.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = liber::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_.file("synth.tsv");
    const auto r = cli({"--run-metadata", dir_.file("synth.json"), "synth", "--out", data_,
                        "--users", "6", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::vector<std::string> common(const std::string& command, const std::string& meta) {
    return {"--run-metadata", dir_.file(meta), command, "--dataset", data_, "--mock-chat",
            "--mock-embed", "--mock-embed-dim", "64", "--dims", "4,4"};
  }

  testing_support::TempDir dir_;
  std::string data_;
};

}  // namespace

TEST_F(CliTest, SynthWritesDataset) {
  std::ifstream in(data_);
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("user_id"), std::string::npos);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 6u * 180u);
  EXPECT_EQ(read_json(dir_.file("synth.json"))["command"], "synth");
}

TEST_F(CliTest, IngestThenWarmIngest) {
  auto args = common("ingest", "ingest.json");
  args.insert(args.end(), {"--store", dir_.file("reps.bin"), "--report", "json"});
  const auto first = cli(args);
  ASSERT_EQ(first.code, 0) << first.err;
  const auto meta = read_json(dir_.file("ingest.json"));
  EXPECT_EQ(meta["config"]["k"], 20);
  EXPECT_EQ(meta["clients"]["chat"], "mock");
  EXPECT_EQ(meta["clients"]["temperature"], 0.0);
  EXPECT_TRUE(meta["versions"].contains("eigen"));
  EXPECT_GT(meta["report"]["new_records"].get<int>(), 0);

  const auto second = cli(args);
  ASSERT_EQ(second.code, 0) << second.err;
  const auto warm = read_json(dir_.file("ingest.json"))["report"];
  EXPECT_EQ(warm["new_records"], 0);
  EXPECT_EQ(warm["efficiency"]["calls_per_user"], 0.0);
}

TEST_F(CliTest, TrainSavesModelAndEvaluateReusesStore) {
  auto train = common("train", "train.json");
  train.insert(train.end(), {"--store", dir_.file("reps.bin"), "--model", dir_.file("m.bin"),
                             "--epochs", "2"});
  const auto t = cli(train);
  ASSERT_EQ(t.code, 0) << t.err;
  auto eval = common("evaluate", "eval.json");
  eval.insert(eval.end(), {"--store", dir_.file("reps.bin"), "--model", dir_.file("m.bin"),
                           "--report", "json"});
  const auto e = cli(eval);
  ASSERT_EQ(e.code, 0) << e.err;
  const auto report = json::parse(e.out);
  EXPECT_EQ(report["result"]["llm_calls"], 0);
  EXPECT_GE(report["result"]["auc"].get<double>(), 0.0);
}

TEST_F(CliTest, AblateListsFourVariantsAndBackbone) {
  auto args = common("ablate", "ablate.json");
  args.insert(args.end(), {"--epochs", "2"});
  const auto r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"full", "no-partition", "no-interest-shift", "no-attention-fuse",
                           "backbone", "calls_per_user", "tokens_per_prompt"}) {
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
  }
  const auto variants = read_json(dir_.file("ablate.json"))["report"]["variants"];
  ASSERT_EQ(variants.size(), 5u);
  EXPECT_EQ(variants[4]["calls_per_user"], 0.0);
}

TEST_F(CliTest, EfficiencyJson) {
  auto args = common("efficiency", "eff.json");
  args.insert(args.end(), {"--variants", "full,no-interest-shift", "--report", "json"});
  const auto r = cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = json::parse(r.out)["variants"];
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0]["calls_per_user"].get<double>(), rows[1]["calls_per_user"].get<double>());
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(cli({"ingest", "--bogus"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  auto no_client = std::vector<std::string>{"--run-metadata", dir_.file("x.json"), "ingest",
                                            "--dataset", data_, "--store", dir_.file("r.bin")};
  EXPECT_EQ(cli(no_client).code, 2);
  auto bad_variant = common("train", "x.json");
  bad_variant.insert(bad_variant.end(), {"--variant", "sideways"});
  EXPECT_EQ(cli(bad_variant).code, 2);
  auto bad_dims = common("train", "x.json");
  bad_dims.insert(bad_dims.end(), {"--dims", "4"});
  EXPECT_EQ(cli(bad_dims).code, 2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST_F(CliTest, DataErrorsExitThree) {
  const auto empty = dir_.file("empty.tsv");
  std::ofstream(empty).close();
  auto args = common("train", "x.json");
  args[4] = empty;
  const auto r = cli(args);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}

TEST_F(CliTest, UnreachableEndpointExitsFour) {
  auto args = std::vector<std::string>{"--run-metadata", dir_.file("x.json"), "ingest",
                                       "--dataset", data_, "--store", dir_.file("r.bin"),
                                       "--chat-endpoint", "http://127.0.0.1:9/v1/chat",
                                       "--mock-embed"};
  const auto r = cli(args);
  EXPECT_EQ(r.code, 4) << r.err;
}
