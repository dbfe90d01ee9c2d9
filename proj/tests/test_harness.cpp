#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "mdbins/mdbins.hpp"

namespace {

const char* kBasicPlan = R"(
# two-choice, one populated dimension per ball
n = 16
D = 2
m = 4n
seed = 42
source.variant = fixed-f-uniform
source.f = 1
process.kind = d-choice
process.d = 2
trials = 6
)";

std::string with(const std::string& plan, const std::string& extra) { return plan + extra + "\n"; }

std::string error_of(const std::string& text) {
  try {
    mdbins::parse_plan(text);
  } catch (const mdbins::config_error& e) {
    return e.what();
  }
  return "";
}

TEST(ParsePlan, ResolvesCounts) {
  const auto plan = mdbins::parse_plan(with(kBasicPlan, "checkpoints = 0, 1n, m"));
  const auto c = plan.point_config(0);
  EXPECT_EQ(c.n, 16u);
  EXPECT_EQ(c.dims, 2u);
  EXPECT_EQ(c.m, 64u);
  EXPECT_EQ(c.checkpoints, (std::vector<std::uint64_t>{0, 16, 64}));
  EXPECT_EQ(c.process.d, 2u);
  EXPECT_EQ(plan.trials, 6u);
}

TEST(ParsePlan, ErrorsNameTheKey) {
  EXPECT_NE(error_of(with(kBasicPlan, "bogus = 1")).find("'bogus'"), std::string::npos);
  EXPECT_NE(error_of(with(kBasicPlan, "n = 3")).find("duplicate key 'n'"), std::string::npos);
  EXPECT_NE(error_of(with(kBasicPlan, "sweep.param = x\nsweep.values = 1")).find("'x'"),
            std::string::npos);
  EXPECT_NE(error_of(with(kBasicPlan, "trials2")).find("key = value"), std::string::npos);
  EXPECT_FALSE(error_of("n = 4\nm = 4\nprocess.kind = d-choice\n").empty());
  EXPECT_FALSE(error_of(with(kBasicPlan, "potential.epsilon = 0.1")).empty());
  EXPECT_FALSE(error_of(with(kBasicPlan, "record_potentials = true")).empty());
  EXPECT_FALSE(error_of(with(kBasicPlan, "checkpoints = 5n")).empty());
}

TEST(ParsePlan, InvalidConfigurationRejected) {
  std::string plan = kBasicPlan;
  plan.replace(plan.find("process.d = 2"), 13, "process.d = 17");
  EXPECT_THROW(mdbins::parse_plan(plan), mdbins::config_error);
  plan = kBasicPlan;
  plan.replace(plan.find("source.f = 1"), 12, "source.f = 3");
  EXPECT_THROW(mdbins::parse_plan(plan), mdbins::config_error);
}

TEST(ParsePlan, SweepPoints) {
  const auto plan = mdbins::parse_plan(with(kBasicPlan, "sweep.param = n\nsweep.values = 8, 32"));
  ASSERT_EQ(plan.points(), 2u);
  EXPECT_EQ(plan.point_config(0).n, 8u);
  EXPECT_EQ(plan.point_config(0).m, 32u);
  EXPECT_EQ(plan.point_config(1).m, 128u);
  EXPECT_EQ(plan.point_label(1), "32");
}

TEST(ParsePlan, MissingFileIsIoError) {
  EXPECT_THROW(mdbins::load_plan("/nonexistent/plan.txt"), mdbins::io_error);
}

TEST(ParsePlan, WeightedPotentialNeedsS) {
  const std::string plan =
      "n = 8\nm = 8\nsource.variant = weighted-scalar\nsource.weight = exponential:1\n"
      "process.kind = d-choice\npotential.variant = weighted-ranked\n";
  EXPECT_THROW(mdbins::parse_plan(plan), mdbins::config_error);
  const auto ok = mdbins::parse_plan(plan + "potential.S = 2\n");
  const auto p = ok.potential_params(ok.point_config(0));
  EXPECT_DOUBLE_EQ(p.S, 2.0);
  EXPECT_DOUBLE_EQ(p.lambda, 1.0);
}

TEST(RunPlan, ZeroBallsGivesSingleRow) {
  std::string plan = kBasicPlan;
  plan.replace(plan.find("m = 4n"), 6, "m = 0");
  const auto result = mdbins::run_plan(mdbins::parse_plan(plan));
  const auto rows = mdbins::parse_csv(mdbins::trajectory_csv(result));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& t : rows) {
    ASSERT_EQ(t.record.rows.size(), 1u);
    EXPECT_EQ(t.record.rows[0].t, 0u);
    EXPECT_EQ(t.record.rows[0].max_gap, 0.0);
  }
}

std::string csv_with_workers(const mdbins::ExperimentPlan& plan, const char* workers) {
  setenv("MDBINS_WORKERS", workers, 1);
  const auto text = mdbins::trajectory_csv(mdbins::run_plan(plan));
  unsetenv("MDBINS_WORKERS");
  return text;
}

TEST(RunPlan, OutputIndependentOfWorkerCount) {
  const auto plan = mdbins::parse_plan(with(kBasicPlan, "sweep.param = d\nsweep.values = 2, 3"));
  const auto one = csv_with_workers(plan, "1");
  EXPECT_EQ(one, csv_with_workers(plan, "4"));
  EXPECT_EQ(one, csv_with_workers(plan, "3"));
}

TEST(RunPlan, CsvRoundTrip) {
  const auto plan = mdbins::parse_plan(
      with(kBasicPlan, "potential.variant = unweighted-grouped\nrecord_potentials = true"));
  const auto result = mdbins::run_plan(plan);
  const auto parsed = mdbins::parse_csv(mdbins::trajectory_csv(result));
  ASSERT_EQ(parsed.size(), result.records[0].size());
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    EXPECT_EQ(parsed[k].point, 0u);
    EXPECT_EQ(parsed[k].record, result.records[0][k]);
    EXPECT_TRUE(parsed[k].record.rows.back().gamma.has_value());
  }
}

TEST(RunPlan, WritesCsvAndSummary) {
  const auto dir = std::filesystem::temp_directory_path() / "mdbins_test_out";
  std::filesystem::remove_all(dir);
  const auto plan = mdbins::parse_plan(with(kBasicPlan, "output = " + (dir / "run").string()));
  mdbins::run_plan(plan);
  ASSERT_TRUE(std::filesystem::exists(dir / "run.csv"));
  std::ifstream in(dir / "run.summary.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["points"].size(), 1u);
  EXPECT_EQ(j["points"][0]["trials"], 6);
  const auto gap = j["points"][0]["final_max_gap"];
  EXPECT_LE(gap["mean_ci95"][0].get<double>(), gap["mean"].get<double>());
  EXPECT_GE(gap["mean_ci95"][1].get<double>(), gap["mean"].get<double>());
  std::filesystem::remove_all(dir);
}

TEST(RunPlan, SeedsDifferAcrossTrials) {
  const auto result = mdbins::run_plan(mdbins::parse_plan(kBasicPlan));
  EXPECT_NE(result.records[0][0].seed, result.records[0][1].seed);
  EXPECT_EQ(result.records[0][0].seed, mdbins::derive_seed(42, 0, 0));
}

TEST(Statistics, BootstrapContainsMean) {
  std::vector<double> v;
  for (int k = 0; k < 50; ++k) v.push_back(std::sin(k) * 3.0 + 10.0);
  const auto ci = mdbins::bootstrap_mean_ci(v, 1);
  const double mu = mdbins::mean(v);
  EXPECT_LT(ci.low, mu);
  EXPECT_GT(ci.high, mu);
  EXPECT_DOUBLE_EQ(mdbins::median({3.0, 1.0, 2.0, 10.0}), 2.5);
}

TEST(Drift, EmptyStatePlainPotential) {
  const auto plan = mdbins::parse_plan(
      "n = 4096\nm = 4096\nsource.variant = fixed-f-uniform\nsource.f = 1\n"
      "process.kind = beta-choice\nprocess.beta = 0.5\npotential.variant = beta-plain\n");
  const auto out = mdbins::drift_command(plan, 0, 100);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0]["gamma"].get<double>(), 8192.0);
  EXPECT_EQ(out[0]["samples"], 100);
}

TEST(OracleCheck, PassesOnSmallPlan) {
  const auto plan = mdbins::parse_plan(
      "n = 2\nm = 2\nsource.variant = fixed-f-uniform\nsource.f = 1\nprocess.kind = one-choice\n");
  const auto results = mdbins::oracle_check(plan, 4000);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_TRUE(results[0].passed());
  EXPECT_DOUBLE_EQ(results[0].expected_gap, 0.5);
}

TEST(Bounds, ReportsCurvesPerPoint) {
  const auto plan = mdbins::parse_plan(with(kBasicPlan, "sweep.param = n\nsweep.values = 8, 16"));
  const auto out = mdbins::bounds_command(plan);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[1]["bounds"]["upper_dchoice_fixed_f"].get<double>(),
                   std::log(std::log(16.0)));
}

}  // namespace
