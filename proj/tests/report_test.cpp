#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "fdsim/corpus.hpp"
#include "fdsim/experiment.hpp"
#include "fdsim/report.hpp"
#include "fdsim/results.hpp"

namespace fdsim {
namespace {

CorpusRanges small_ranges() {
  CorpusRanges r;
  r.switches_min = 4;
  r.switches_max = 6;
  r.pairs_min = 600;
  r.pairs_max = 900;
  r.iat_scale_min = 8.0;
  r.iat_scale_max = 10.0;
  r.duration_min = 10.0;
  r.duration_max = 20.0;
  return r;
}

TEST(Corpus, EntriesStayInsideRanges) {
  const CorpusRanges r;
  for (int i = 0; i < 200; ++i) {
    const auto e = corpus_entry(r, 7, i);
    EXPECT_GE(e.topology.n_switches, r.switches_min);
    EXPECT_LE(e.topology.n_switches, r.switches_max);
    EXPECT_GE(e.params.n_pairs, r.pairs_min);
    EXPECT_LE(e.params.n_pairs, r.pairs_max);
    EXPECT_GE(e.params.n_bneck_intensity, r.intensity_min);
    EXPECT_LE(e.params.n_bneck_intensity, r.intensity_max);
    EXPECT_GE(e.params.n_bneck, r.bneck_min);
    EXPECT_LE(e.params.n_bneck, r.bneck_max);
  }
}

TEST(Corpus, SeedsAreDistinctAndRepeatable) {
  std::set<std::uint64_t> seeds;
  for (int i = 0; i < 100; ++i) seeds.insert(corpus_entry(CorpusRanges{}, 42, i).seed);
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_EQ(corpus_entry(CorpusRanges{}, 42, 5).seed, corpus_entry(CorpusRanges{}, 42, 5).seed);
  EXPECT_NE(corpus_entry(CorpusRanges{}, 42, 5).seed, corpus_entry(CorpusRanges{}, 43, 5).seed);
  const auto r = small_ranges();
  EXPECT_EQ(scenario_to_string(generate_corpus_scenario(r, 3, 1)), scenario_to_string(generate_corpus_scenario(r, 3, 1)));
}

TEST(Corpus, RejectsInvertedRange) {
  CorpusRanges r;
  r.pairs_min = 10;
  r.pairs_max = 5;
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(Csv, RunsRoundTrip) {
  RunReport rep;
  rep.algorithm = Algorithm::kGreedy;
  rep.horizon = 3;
  rep.failure_rate = 1.25;
  rep.link_overhead = 1234.5;
  rep.ctrl_messages = 77;
  std::ostringstream os;
  write_runs_csv(os, {{0, "a,b", 9, 20.0}}, {rep});
  std::istringstream is(os.str());
  const auto t = CsvTable::parse(is);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.header(), run_columns());
  EXPECT_EQ(t.str(0, "scenario"), "a_b");
  EXPECT_EQ(t.str(0, "algorithm"), "greedy");
  EXPECT_DOUBLE_EQ(t.num(0, "failure_rate"), 1.25);
  EXPECT_DOUBLE_EQ(t.num(0, "link_overhead"), 1234.5);
  EXPECT_DOUBLE_EQ(t.num(0, "ctrl_messages"), 77);
  EXPECT_DOUBLE_EQ(t.num(0, "reduction_target"), 20.0);
  EXPECT_THROW(t.num(0, "nope"), std::runtime_error);
}

TEST(Csv, TimeseriesHeader) {
  std::ostringstream os;
  write_timeseries_csv(os, {{3, 1, 9, 4, 0, 1, 2, 0}});
  EXPECT_EQ(os.str(), "slot,switch,utilization,relocated,hosted,aggregation,backflow,bs_rules\n3,1,9,4,0,1,2,0\n");
}

TEST(Csv, RaggedRowThrows) {
  std::istringstream is("a,b\n1,2\n3\n");
  EXPECT_THROW(CsvTable::parse(is), std::runtime_error);
}

CsvTable planted_runs() {
  // Failure rates 0..100 in group 20 and 1..10 in group 50 for one algorithm.
  std::ostringstream os;
  os << "algorithm,reduction_target,failure_rate,link_overhead\n";
  for (int i = 0; i <= 100; ++i) os << "heuristic,20," << i << "," << (i % 3) << "\n";
  for (int i = 1; i <= 10; ++i) os << "heuristic,50," << i << ",0\n";
  os << "greedy,20,4,5\n";
  std::istringstream is(os.str());
  return CsvTable::parse(is);
}

TEST(Report, PlantedPercentiles) {
  const auto rows = percentile_table(planted_runs());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].algorithm, "greedy");
  EXPECT_DOUBLE_EQ(rows[0].p50, 4.0);
  EXPECT_DOUBLE_EQ(rows[0].p90, 4.0);
  EXPECT_EQ(rows[1].n, 101);
  EXPECT_DOUBLE_EQ(rows[1].p50, 50.0);
  EXPECT_DOUBLE_EQ(rows[1].p90, 90.0);
  EXPECT_DOUBLE_EQ(rows[1].mean, 50.0);
  // 1..10: rank 0.5*9 = 4.5 -> 5.5; rank 0.9*9 = 8.1 -> 9.1.
  EXPECT_DOUBLE_EQ(rows[2].p50, 5.5);
  EXPECT_NEAR(rows[2].p90, 9.1, 1e-12);
}

TEST(Report, EcdfStepsOverDistinctValues) {
  const auto rows = ecdf_table(planted_runs(), {"link_overhead"});
  std::vector<EcdfRow> h20;
  for (const auto& r : rows)
    if (r.algorithm == "heuristic" && r.reduction == 20) h20.push_back(r);
  ASSERT_EQ(h20.size(), 3u);
  // 0..100 mod 3: 34 zeros, 34 ones, 33 twos.
  EXPECT_DOUBLE_EQ(h20[0].fraction, 34.0 / 101);
  EXPECT_DOUBLE_EQ(h20[1].fraction, 68.0 / 101);
  EXPECT_DOUBLE_EQ(h20[2].fraction, 1.0);
}

TEST(Report, RuntimeTable) {
  std::ostringstream os;
  write_timings_header(os);
  write_timings_rows(os, 0, Algorithm::kHeuristic,
                     {{0, 1, "dt_select", 3, 1.0, 2.0}, {1, 1, "dt_select", 3, 100.0, 100.0}, {0, -1, "rs_alloc", 2, 0.5, 0.5}});
  std::istringstream is(os.str());
  const auto rows = runtime_table(CsvTable::parse(is));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].step, "dt_select");
  EXPECT_EQ(rows[0].n, 2);
  EXPECT_DOUBLE_EQ(rows[0].p50, 101.5);
  EXPECT_DOUBLE_EQ(rows[0].max, 200.0);
  EXPECT_DOUBLE_EQ(rows[0].below_128ms, 0.5);
  EXPECT_DOUBLE_EQ(rows[0].mean_modeling, 50.5);
  EXPECT_DOUBLE_EQ(rows[1].p50, 1.0);
}

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.generate_count = 3;
  c.seed = 11;
  c.ranges = small_ranges();
  c.grid = {30, 40, 50};
  c.algorithms = {Algorithm::kHeuristic, Algorithm::kGreedy};
  return c;
}

TEST(Sweep, ConfigValidation) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.generate_count = 1;
  EXPECT_NO_THROW(c.validate());
  c.grid = {0.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.grid = {100.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.grid = {10.0};
  c.algorithms = {Algorithm::kExact};
  c.horizon = 6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Sweep, EmptyGridRunsNothing) {
  auto c = small_sweep();
  c.grid.clear();
  const auto r = run_sweep(c);
  EXPECT_TRUE(r.reports.empty());
}

TEST(Sweep, GridScalesCapacitiesAndOrdersById) {
  const auto c = small_sweep();
  const auto r = run_sweep(c);
  ASSERT_EQ(r.reports.size(), 18u);
  for (std::size_t i = 0; i < r.keys.size(); ++i) {
    EXPECT_EQ(r.keys[i].experiment, static_cast<int>(i));
    EXPECT_EQ(r.reports[i].algorithm, c.algorithms[i % 2]);
    EXPECT_EQ(r.keys[i].reduction_target, c.grid[(i / 2) % 3]);
    EXPECT_NEAR(r.reports[i].capacity_reduction, r.keys[i].reduction_target, 1.0);
    EXPECT_EQ(r.reports[i].census_violations, 0);
  }
  EXPECT_EQ(r.keys[0].scenario, "corpus-00000");
  EXPECT_EQ(r.keys[17].scenario, "corpus-00002");
}

TEST(Sweep, WorkerCountDoesNotChangeOutput) {
  auto c = small_sweep();
  const std::string one = runs_csv(run_sweep(c));
  c.jobs = 3;
  EXPECT_EQ(runs_csv(run_sweep(c)), one);
}

TEST(Sweep, GroupPercentilesRecomputableFromCsv) {
  auto c = small_sweep();
  c.generate_count = 5;
  const auto r = run_sweep(c);
  std::istringstream is(runs_csv(r));
  const auto rows = percentile_table(CsvTable::parse(is));
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& row : rows) {
    std::vector<double> v;
    for (std::size_t i = 0; i < r.reports.size(); ++i)
      if (to_string(r.reports[i].algorithm) == row.algorithm && r.keys[i].reduction_target == row.reduction)
        v.push_back(r.reports[i].failure_rate);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_NEAR(row.p50, percentile(v, 50), 1e-9 * (1 + std::abs(row.p50)));
    EXPECT_NEAR(row.p90, percentile(v, 90), 1e-9 * (1 + std::abs(row.p90)));
  }
}

TEST(Sweep, WritesFilesAndManifest) {
  auto c = small_sweep();
  c.generate_count = 1;
  const auto dir = std::filesystem::temp_directory_path() / "fdsim_report_test";
  std::filesystem::remove_all(dir);
  write_sweep(dir, c, run_sweep(c));
  EXPECT_EQ(CsvTable::load((dir / "runs.csv").string()).size(), 6u);
  EXPECT_TRUE(CsvTable::load((dir / "timings.csv").string()).has("solving_ms"));
  std::ifstream m(dir / "manifest.json");
  const auto j = nlohmann::json::parse(m);
  EXPECT_EQ(j.at("experiments").get<int>(), 6);
  EXPECT_EQ(j.at("scenarios").size(), 1u);
  EXPECT_EQ(j.at("config").at("grid").size(), 3u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fdsim
