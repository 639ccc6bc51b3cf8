#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include "coldrec/bundle.hpp"
#include "coldrec/report.hpp"
#include "coldrec/sweep.hpp"
#include "coldrec/synthetic.hpp"
#include "test_util.hpp"

namespace coldrec::sweep {
namespace {

namespace fs = std::filesystem;

// Mock that dies with a non-library exception once `limit` calls succeeded,
// like a process killed mid-sweep.
class InterruptingAdapter final : public model::Adapter {
 public:
  explicit InterruptingAdapter(std::size_t limit) : limit_(limit) {}
  std::size_t successes() const { return successes_.load(); }

 protected:
  model::ModelResponse do_generate(const model::ModelRequest& request) override {
    if (successes_.load() >= limit_) throw std::runtime_error("interrupted");
    model::ModelResponse r;
    r.raw_text = model::mock_generate(request.prompt_text, request.top_n);
    ++successes_;
    return r;
  }

 private:
  std::size_t limit_;
  std::atomic<std::size_t> successes_{0};
};

// Fails every request whose prompt hash lands in the failing fraction.
class FlakyAdapter final : public model::Adapter {
 public:
  explicit FlakyAdapter(unsigned every) : every_(every) {}

 protected:
  model::ModelResponse do_generate(const model::ModelRequest& request) override {
    if (every_ == 1 || std::hash<std::string>{}(request.prompt_text) % every_ == 0) {
      throw model::ModelError("backend down", 503, 5, "http");
    }
    model::ModelResponse r;
    r.raw_text = model::mock_generate(request.prompt_text, request.top_n);
    return r;
  }

 private:
  unsigned every_;
};

class SweepTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    bundle_dir_ = new testing::TempDir;
    corpus::SyntheticSpec spec;
    spec.users = 200;
    corpus::write_bundle(corpus::make_synthetic(spec), bundle_dir_->path());
  }
  static void TearDownTestSuite() {
    delete bundle_dir_;
    bundle_dir_ = nullptr;
  }

  SweepConfig small_config(const fs::path& out) const {
    SweepConfig c;
    c.bundle = bundle_dir_->path();
    c.output_dir = out;
    c.l_grid = {256, 1024};
    c.k_grid = {2, 6};
    c.seeds = {1, 2};
    c.concurrency = 1;
    return c;
  }

  static testing::TempDir* bundle_dir_;
};

testing::TempDir* SweepTest::bundle_dir_ = nullptr;

TEST_F(SweepTest, ExpandsDefaultGrid) {
  SweepConfig c;
  EXPECT_EQ(expand_cells(c, 1).size(), 20u);
  c.zero_shot = true;
  c.no_header = true;
  const auto cells = expand_cells(c, 3);
  EXPECT_EQ(cells.size(), 44u);
  EXPECT_EQ(cells.back().dir_name(), "2048_0_3_zeroshot");
  EXPECT_EQ(cells[20].dir_name(), "256_2_3_noheader");
}

TEST_F(SweepTest, WritesOutputLayoutAndRespectsBudgets) {
  testing::TempDir out;
  auto config = small_config(out.path());
  config.zero_shot = true;
  const auto outcome = run_sweep(config);
  EXPECT_EQ(outcome.failed_cells, 0u);
  EXPECT_EQ(outcome.table.records.size(), 12u);
  for (const char* f : {"manifest.json", "summary.json", "results.csv", "report.md", "series/vs_k.csv",
                        "splits/seed_1.json", "cells/256_2_1/record.json", "cells/256_2_1/timing.json",
                        "cells/1024_0_2_zeroshot/record.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  for (const auto& r : outcome.table.records) {
    for (const auto& u : r.users) {
      EXPECT_LE(u.token_count, r.key.l);
      EXPECT_LE(u.included_exemplars, r.key.k);
    }
  }
  EXPECT_EQ(report::budget_violations(outcome.table), 0u);
  const auto record = testing::read_file(out / "cells/256_2_1/record.json");
  EXPECT_EQ(record.find("wall_clock"), std::string::npos);
  EXPECT_EQ(record.find("cache_hit"), std::string::npos);
}

TEST_F(SweepTest, DeterministicAcrossRunsAndThreadCounts) {
  testing::TempDir a, b;
  auto ca = small_config(a.path());
  auto cb = small_config(b.path());
  cb.concurrency = 4;
  run_sweep(ca);
  run_sweep(cb);
  EXPECT_EQ(testing::read_file(a / "results.csv"), testing::read_file(b / "results.csv"));
  EXPECT_EQ(testing::read_file(a / "cells/1024_6_2/record.json"), testing::read_file(b / "cells/1024_6_2/record.json"));
}

TEST_F(SweepTest, WarmCacheMakesNoCalls) {
  testing::TempDir out;
  const auto config = small_config(out.path());
  model::MockAdapter first;
  const auto cold = run_sweep(config, &first);
  EXPECT_GT(first.calls(), 0u);
  const auto cold_csv = testing::read_file(out / "results.csv");

  model::MockAdapter second;
  const auto warm = run_sweep(config, &second);
  EXPECT_EQ(second.calls(), 0u);
  EXPECT_EQ(warm.generate_calls, 0u);
  EXPECT_EQ(testing::read_file(out / "results.csv"), cold_csv);
}

TEST_F(SweepTest, ResumesFromTranscriptCache) {
  testing::TempDir clean_out, out;
  model::MockAdapter clean;
  run_sweep(small_config(clean_out.path()), &clean);
  const std::size_t unique_prompts = clean.calls();
  ASSERT_GT(unique_prompts, 30u);

  const std::size_t n = 25;
  InterruptingAdapter interrupted(n);
  EXPECT_THROW(run_sweep(small_config(out.path()), &interrupted), std::runtime_error);
  EXPECT_EQ(interrupted.successes(), n);

  model::MockAdapter resumed;
  const auto outcome = run_sweep(small_config(out.path()), &resumed);
  EXPECT_EQ(resumed.calls(), unique_prompts - n);
  EXPECT_EQ(outcome.failed_cells, 0u);
  EXPECT_EQ(testing::read_file(out / "results.csv"), testing::read_file(clean_out / "results.csv"));
}

TEST_F(SweepTest, FailureBudgetMarksCells) {
  testing::TempDir out;
  auto config = small_config(out.path());
  config.seeds = {1};
  FlakyAdapter always(1);
  const auto outcome = run_sweep(config, &always);
  EXPECT_EQ(outcome.failed_cells, 4u);
  for (const auto& r : outcome.table.records) {
    EXPECT_TRUE(r.failed);
    EXPECT_NE(r.failure.find("users failed"), std::string::npos) << r.failure;
  }
  const auto csv = testing::read_file(out / "results.csv");
  EXPECT_NE(csv.find(",failed\n"), std::string::npos);
  for (const auto& row : outcome.table.rows) EXPECT_EQ(row.summary.runs, 0u);
}

TEST_F(SweepTest, SparseFailuresStayWithinBudget) {
  testing::TempDir out;
  auto config = small_config(out.path());
  config.seeds = {1};
  config.failure_budget = 0.5;
  FlakyAdapter some(5);
  const auto outcome = run_sweep(config, &some);
  EXPECT_EQ(outcome.failed_cells, 0u);
  std::size_t failed_users = 0;
  for (const auto& r : outcome.table.records)
    for (const auto& u : r.users) failed_users += !u.ok;
  EXPECT_GT(failed_users, 0u);
}

TEST_F(SweepTest, RecordsRoundTripAndReportRegenerates) {
  testing::TempDir out;
  const auto outcome = run_sweep(small_config(out.path()));
  auto loaded = load_records(out.path());
  ASSERT_EQ(loaded.size(), outcome.table.records.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(to_json(loaded[i]), to_json(outcome.table.records[i]));
  }
  const auto rebuilt = build_table(std::move(loaded), outcome.table.dataset, outcome.table.model_id);
  std::ostringstream csv;
  write_results_csv(rebuilt, csv);
  EXPECT_EQ(csv.str(), testing::read_file(out / "results.csv"));
}

TEST_F(SweepTest, ReportCurvesAndBest) {
  testing::TempDir out;
  auto config = small_config(out.path());
  config.zero_shot = true;
  const auto outcome = run_sweep(config);
  const auto curve = report::marginal_over_k(outcome.table, report::Metric::ndcg_at_10);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].x, 2);
  EXPECT_EQ(curve[0].rows, 2u);
  const auto best = report::best_row(outcome.table, report::Metric::ndcg_at_10);
  ASSERT_TRUE(best);
  EXPECT_EQ(best->variant, Variant::optimized);
  const auto gain = report::headline_gain(outcome.table);
  ASSERT_TRUE(gain);
  EXPECT_FALSE(gain->gain_ndcg);  // mock zero-shot scores 0
  const auto md = testing::read_file(out / "report.md");
  EXPECT_NE(md.find("n/a"), std::string::npos);
}

TEST(Knee, FirstPointWithoutLaterImprovement) {
  using report::CurvePoint;
  EXPECT_EQ(report::knee({{256, 0.1, 1}, {512, 0.3, 1}, {1024, 0.302, 1}, {2048, 0.303, 1}}), 512);
  EXPECT_EQ(report::knee({{256, 0.1, 1}, {512, 0.2, 1}, {1024, 0.3, 1}}), 1024);
  EXPECT_FALSE(report::knee({}));
}

TEST(CellKey, DirectoryNamesAndOrdering) {
  EXPECT_EQ((CellKey{Variant::optimized, 512, 6, 3}).dir_name(), "512_6_3");
  EXPECT_EQ((CellKey{Variant::no_header, 512, 6, 3}).dir_name(), "512_6_3_noheader");
  EXPECT_EQ(parse_variant("zero_shot"), Variant::zero_shot);
  EXPECT_THROW(parse_variant("bogus"), InputError);
}

}  // namespace
}  // namespace coldrec::sweep
