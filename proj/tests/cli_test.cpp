#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "coldrec/cli.hpp"
#include "test_util.hpp"

namespace coldrec::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"sweep", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(invoke({"ingest", "--kind", "bogus", "--input", "x", "--out", "y"}).code, kExitUsage);
  EXPECT_EQ(invoke({"gains", "a", "1", "2", "3"}).code, kExitUsage);
  EXPECT_EQ(invoke({"gains", "0", "1", "2", "3"}).code, kExitUsage);
  EXPECT_EQ(invoke({"sweep"}).code, kExitUsage);  // no bundle
}

TEST(Cli, GainsOutput) {
  const auto r = invoke({"gains", "43.6", "48.3", "51.8", "58.6"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out,
            "baseline P@5 / NDCG: 43.6 / 48.3\n"
            "proposed P@5 / NDCG: 51.8 / 58.6\n"
            "gains: 18.8 / 21.3\n");
  EXPECT_NE(invoke({"gains", "42.1", "49", "47.5", "55"}).out.find("42.1 / 49.0\n"), std::string::npos);
}

TEST(Cli, MissingInputIsRuntimeFailure) {
  testing::TempDir dir;
  const auto r = invoke({"ingest", "--kind", "movielens", "--input", (dir / "nope").string(), "--out", (dir / "b").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("input not found"), std::string::npos);
}

TEST(Cli, SynthSplitRunSweepReport) {
  testing::TempDir dir;
  const std::string bundle = (dir / "bundle").string();
  ASSERT_EQ(invoke({"synth", "--out", bundle, "--users", "150"}).code, kExitOk);

  const auto split = invoke({"split", "--bundle", bundle, "--seed", "3"});
  ASSERT_EQ(split.code, kExitOk);
  const auto doc = nlohmann::json::parse(split.out);
  EXPECT_EQ(doc["seed"], 3);

  const auto cell = invoke({"run", "--bundle", bundle, "--out", (dir / "cell").string(), "--l", "512", "--k", "4"});
  ASSERT_EQ(cell.code, kExitOk) << cell.err;
  EXPECT_EQ(nlohmann::json::parse(cell.out)["cell"], "512_4_1");
  EXPECT_TRUE(fs::exists(dir / "cell/record.json"));

  testing::write_file(dir / "sweep.conf", "l_grid = 256, 512\nk_grid = 2, 4\nseeds = 1\n");
  const std::string sweep_dir = (dir / "sweep").string();
  const auto sweep = invoke({"sweep", "--config", (dir / "sweep.conf").string(), "--bundle", bundle, "--out",
                             sweep_dir, "--zero-shot", "--set", "concurrency=2"});
  ASSERT_EQ(sweep.code, kExitOk) << sweep.err;
  EXPECT_EQ(nlohmann::json::parse(sweep.out)["cells"], 6);

  const auto csv = testing::read_file(fs::path(sweep_dir) / "results.csv");
  fs::remove(fs::path(sweep_dir) / "results.csv");
  fs::remove(fs::path(sweep_dir) / "report.md");
  ASSERT_EQ(invoke({"report", "--out", sweep_dir}).code, kExitOk);
  EXPECT_EQ(testing::read_file(fs::path(sweep_dir) / "results.csv"), csv);
  EXPECT_TRUE(fs::exists(fs::path(sweep_dir) / "report.md"));

  EXPECT_EQ(invoke({"sweep", "--bundle", bundle, "--set", "bogus=1"}).code, kExitUsage);
}

}  // namespace
}  // namespace coldrec::cli
