#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "fdsim/results.hpp"
#include "fdsim/scenario_io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fdsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "small.json") << R"({"topology":{"n_switches":5},"params":{"n_pairs":600,"n_iat_scale":8}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int fdsim(const std::string& args, std::string* out = nullptr) {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" FDSIM_BIN "' " + args + " > '" + log.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    if (out) *out = slurp(log);
    return rc;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, MissingScenarioFails) {
  std::string out;
  EXPECT_NE(fdsim("run --scenario nope.json", &out), 0);
  EXPECT_NE(out.find("does not exist"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandFails) { EXPECT_NE(fdsim("frobnicate"), 0); }

TEST_F(Cli, GenerateIsRepeatable) {
  ASSERT_EQ(fdsim("generate --out a --count 1 --seed 5 --params small.json"), 0);
  ASSERT_EQ(fdsim("generate --out b --count 1 --seed 5 --params small.json"), 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_ / "a"), fs::directory_iterator{}), 1);
  EXPECT_EQ(slurp(dir_ / "a/scenario-00000.json"), slurp(dir_ / "b/scenario-00000.json"));
}

TEST_F(Cli, HundredScenariosHaveDistinctSeeds) {
  std::ofstream(dir_ / "tiny.json") << R"({"topology":{"n_switches":3},"params":{"n_pairs":20,"n_bneck":0}})";
  ASSERT_EQ(fdsim("generate --out c --count 100 --seed 9 --params tiny.json"), 0);
  std::set<std::uint64_t> seeds;
  for (const auto& e : fs::directory_iterator(dir_ / "c")) seeds.insert(fdsim::load_scenario(e.path().string()).seed);
  EXPECT_EQ(seeds.size(), 100u);
}

TEST_F(Cli, RunWithoutBottleneckReportsZeroOverhead) {
  ASSERT_EQ(fdsim("generate --out s --count 1 --seed 5 --params small.json"), 0);
  ASSERT_EQ(fdsim("run --scenario s/scenario-00000.json --out r"), 0);
  const auto t = fdsim::CsvTable::load((dir_ / "r/runs.csv").string());
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.num(0, "failure_rate"), 0.0);
  EXPECT_EQ(t.num(0, "table_overhead"), 0.0);
  EXPECT_EQ(t.num(0, "link_overhead"), 0.0);
  EXPECT_EQ(t.num(0, "ctrl_overhead"), 0.0);
  EXPECT_EQ(t.num(0, "dt_select_calls"), 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "r/timeseries.csv"));
}

TEST_F(Cli, RerunGivesIdenticalMetrics) {
  ASSERT_EQ(fdsim("generate --out s --count 1 --seed 5 --params small.json"), 0);
  ASSERT_EQ(fdsim("run --scenario s/scenario-00000.json --reduction 40 --out r1"), 0);
  ASSERT_EQ(fdsim("run --scenario s/scenario-00000.json --reduction 40 --out r2"), 0);
  EXPECT_EQ(slurp(dir_ / "r1/runs.csv"), slurp(dir_ / "r2/runs.csv"));
  EXPECT_EQ(slurp(dir_ / "r1/timeseries.csv"), slurp(dir_ / "r2/timeseries.csv"));
  EXPECT_GT(fdsim::CsvTable::load((dir_ / "r1/runs.csv").string()).num(0, "dt_select_calls"), 0.0);
}

TEST_F(Cli, SweepThenReport) {
  ASSERT_EQ(fdsim("generate --out s --count 2 --seed 5 --params small.json"), 0);
  ASSERT_EQ(fdsim("sweep --scenarios s/scenario-00000.json s/scenario-00001.json --grid 30,40,50 "
                  "--algorithms heuristic,greedy --out sw"),
            0);
  EXPECT_EQ(fdsim::CsvTable::load((dir_ / "sw/runs.csv").string()).size(), 12u);
  std::string out;
  ASSERT_EQ(fdsim("report --in sw", &out), 0);
  for (const char* f : {"percentiles.csv", "ecdf.csv", "runtime.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "sw" / f)) << f;
  EXPECT_EQ(fdsim::CsvTable::load((dir_ / "sw/percentiles.csv").string()).size(), 6u);
}

TEST_F(Cli, PrintConfigEchoesSeedAndPaths) {
  std::string out;
  ASSERT_EQ(fdsim("sweep --generate 3 --seed 77 --grid 5,10 --out somewhere --print-config", &out), 0);
  EXPECT_NE(out.find("\"seed\": 77"), std::string::npos);
  EXPECT_NE(out.find("somewhere"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "somewhere"));
}

TEST_F(Cli, InvalidGridFails) { EXPECT_NE(fdsim("sweep --generate 1 --grid 0"), 0); }

}  // namespace
