// Copyright 2026 The evsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the built command-line tool and checks its files and exit codes.

#include "evsched/index.hpp"
#include "evsched/model.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace evsched {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evsched_cli_" + std::to_string(getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + EVSCHED_CLI + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  std::string config(const std::string& name) const {
    return (fs::path(EVSCHED_CONFIG_DIR) / name).string();
  }

  std::string out() const { return "--out \"" + dir_.string() + "\""; }

  nlohmann::json json_file(const std::string& name) const {
    std::ifstream in(dir_ / name);
    return nlohmann::json::parse(in);
  }

  fs::path dir_;
};

TEST_F(Cli, ConstantCostIndexMatchesClosedForm) {
  ASSERT_EQ(run("index --config " + config("constant_cost.json") + " --verify-oracle " + out()), 0);
  std::ifstream in(dir_ / "index_table.csv");
  const IndexTable table = IndexTable::read_csv(in);
  const auto f = PenaltyFunction::quadratic(0.2, 9);
  for (int t = 1; t <= 12; ++t)
    for (int b = 1; b <= 9; ++b)
      EXPECT_NEAR(table(t, b, 0, 0), closed_form_index(t, b, 0.5, 0.999, f), 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "index_table.json"));
}

TEST_F(Cli, DynamicIndexAgainstOracle) {
  EXPECT_EQ(run("index --config " + config("small_dynamic.json") + " --verify-oracle " + out()), 0);
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
  const auto no_penalty = write("bad.json", R"({"instance": {"chargers": 3}})");
  EXPECT_EQ(run("index --config " + no_penalty.string() + " " + out()), 2);
  const auto unknown = write("bad2.json", R"({"instance": {"penalty": {"quadratic": 0.2}}, "x": 0})");
  EXPECT_EQ(run("bound --config " + unknown.string() + " " + out()), 2);
  const auto bad_policy =
      write("bad3.json", R"({"instance": {"penalty": {"quadratic": 0.2}}, "policies": ["fifo"]})");
  EXPECT_EQ(run("simulate --config " + bad_policy.string() + " " + out()), 2);
  EXPECT_EQ(run("simulate --config " + config("toy.json") + " --paired-baseline nope " + out()), 2);
  EXPECT_EQ(run("index --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run("index"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(Cli, VerificationFailureExitsWithThree) {
  // Far below the agreement two independent floating-point methods reach.
  const auto strict = write("strict.json", R"({
    "instance": {"chargers": 2, "capacity": 1, "discount": 0.9, "max_lead": 3, "max_demand": 2,
                 "penalty": {"quadratic": 0.2},
                 "cost": {"levels": [0.2, 0.8], "transition": [[0.9, 0.1], [0.5, 0.5]]}},
    "oracle": {"verify": true, "tolerance": 1e-30}})");
  EXPECT_EQ(run("index --config " + strict.string() + " " + out()), 3);
}

TEST_F(Cli, SingleSeedSinglePolicyGivesOneRow) {
  const auto one = write("one.json", R"({
    "instance": {"chargers": 3, "capacity": 1, "discount": 0.9, "max_lead": 3, "max_demand": 2,
                 "penalty": {"quadratic": 0.2}},
    "policies": ["llf"], "seeds": {"first": 4, "count": 1}, "horizon": 50})");
  ASSERT_EQ(run("simulate --config " + one.string() + " " + out()), 0);
  std::ifstream in(dir_ / "episodes.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1);
}

TEST_F(Cli, PairedBaselineIsReported) {
  ASSERT_EQ(run("simulate --config " + config("toy.json") + " --seeds 6 --paired-baseline edf " + out()),
            0);
  const auto report = json_file("report.json");
  ASSERT_EQ(report["paired"].size(), 4u);
  for (const auto& d : report["paired"]) EXPECT_EQ(d["baseline"], "edf");
  std::ifstream plot(dir_ / "plot.csv");
  std::string header;
  std::getline(plot, header);
  EXPECT_EQ(header, "series,m_over_n,chargers,reward_per_charger,ci95_half_width");
}

TEST_F(Cli, BoundEqualCapacityAndZeroCapacity) {
  const std::string inst = R"("chargers": 3, "discount": 0.9, "max_lead": 3, "max_demand": 2,
      "penalty": {"table": [0, 0.3, 1.0]}, "arrivals": {"rate": 0.6},
      "cost": {"levels": [0.2, 0.8], "transition": [[0.9, 0.1], [0.5, 0.5]]})";
  const auto full = write("full.json", R"({"instance": {"capacity": 3, )" + inst + "}}");
  const auto none = write("none.json", R"({"instance": {"capacity": 0, )" + inst + "}}");
  ASSERT_EQ(run("bound --verify-oracle --config " + full.string() + " " + out()), 0);
  const auto b_full = json_file("bound.json");
  EXPECT_EQ(b_full["lambda"], 0.0);
  EXPECT_NEAR(b_full["bound"].get<double>(),
              b_full["verification"]["joint_dp"]["value"].get<double>(), 1e-6);
  ASSERT_EQ(run("bound --config " + none.string() + " " + out()), 0);
  const auto b_none = json_file("bound.json");
  EXPECT_LT(b_none["bound"].get<double>(), 0.0);
  EXPECT_NEAR(b_none["activation_frequency"].get<double>(), 0.0, 1e-12);
}

TEST_F(Cli, ToyBoundDominatesJointOptimum) {
  ASSERT_EQ(run("bound --verify-oracle --config " + config("toy.json") + " " + out()), 0);
  const auto b = json_file("bound.json");
  EXPECT_GE(b["bound"].get<double>() + 1e-9, b["verification"]["joint_dp"]["value"].get<double>());
  EXPECT_NEAR(b["bound"].get<double>(), b["verification"]["occupancy_lp"]["bound"].get<double>(),
              1e-6);
}

TEST_F(Cli, FitCostWritesChain) {
  ASSERT_EQ(run("fitcost --trace " + std::string(EVSCHED_DATA_DIR) +
                "/sample_rt_prices.csv --states 5 --slot 3600 " + out()),
            0);
  const auto chain = json_file("cost_chain.json");
  EXPECT_NEAR(chain["levels"][4].get<double>(), 0.86637426488031577, 1e-12);
  EXPECT_NEAR(chain["transition"][4][2].get<double>(), 0.098976109215017066, 1e-12);
  EXPECT_EQ(run("fitcost --states 5 " + out()), 2);
  EXPECT_EQ(run("fitcost --trace " + (dir_ / "none.csv").string() + " " + out()), 2);
}

}  // namespace
}  // namespace evsched
