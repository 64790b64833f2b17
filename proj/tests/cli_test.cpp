#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "test_support.hpp"

namespace {

using truckflow::testing::DataPath;
using truckflow::testing::TempDir;

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int Invoke(const std::string& args, const std::filesystem::path& log = "/dev/null") {
  const std::string cmd =
      std::string(TRUCKFLOW_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// One small pipeline shared by every case: synth, ingest, train, explain.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    const auto d = dir_->path().string();
    ASSERT_EQ(Invoke("synth --zones 20 --seed 4 --out-dir " + d), 0);
    ASSERT_EQ(Invoke("ingest --flows " + d + "/od_flows.csv --zones " + d +
                  "/zones.csv --out " + d + "/dataset.csv"),
              0);
    ASSERT_EQ(Invoke("train --data " + d + "/dataset.csv --config " +
                  DataPath("train.cfg").string() + " --seed 2 --out " + d + "/model.json"),
              0);
    ASSERT_EQ(Invoke("explain --model " + d + "/model.json --data " + d +
                  "/dataset.csv --partition all --out " + d + "/shap.csv --interactions GCD,orig_pop"),
              0);
  }
  static void TearDownTestSuite() { delete dir_; }

  static std::string P(const std::string& name) { return (dir_->path() / name).string(); }

  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

struct Case {
  const char* name;
  std::string args;
  int expected;
};

TEST_F(Cli, ExitCodeMatrix) {
  const std::string data = " --data " + P("dataset.csv");
  const std::string model = " --model " + P("model.json");
  const std::string zeros = P("zeros.csv");
  std::ofstream(zeros) << "origin_zone,destination_zone,annual_total_trips\nZ01,Z02,-4\n";
  std::ofstream(P("bad_model.json")) << "{\"format_version\":";
  std::ofstream(P("bad_grid.csv")) << "depth,1,2\n";

  const std::vector<Case> cases{
      {"synth ok", "synth --zones 5 --out-dir " + P("s5"), 0},
      {"synth domain", "synth --zones 5 --k 1e-30 --out-dir " + P("s6"), 1},
      {"synth usage", "synth --zones 1", 2},
      {"synth unknown flag", "synth --bogus", 2},
      {"ingest ok", "ingest --flows " + P("od_flows.csv") + " --zones " + P("zones.csv") +
                        " --out " + P("d2.csv"), 0},
      {"ingest domain", "ingest --flows " + zeros + " --zones " + P("zones.csv") +
                            " --out " + P("d3.csv"), 1},
      {"ingest usage", "ingest --flows " + P("od_flows.csv"), 2},
      {"stats ok", "stats" + data + " --out " + P("stats.csv"), 0},
      {"stats domain", "stats --flows " + zeros + " --zones " + P("zones.csv"), 1},
      {"stats usage", "stats", 2},
      {"train ok", "train" + data + " --rounds 3 --out " + P("m3.json"), 0},
      {"train domain", "train --data " + P("zones.csv") + " --out " + P("m4.json"), 1},
      {"train usage", "train" + data + " --eta banana", 2},
      {"train bad value", "train" + data + " --eta 0 --out " + P("m5.json"), 2},
      {"evaluate ok", "evaluate" + model + data, 0},
      {"evaluate domain", "evaluate --model " + P("bad_model.json") + data, 1},
      {"evaluate usage", "evaluate" + model, 2},
      {"cv ok", "cv" + data + " --k 3 --rounds 3", 0},
      {"cv domain", "cv --data " + P("zones.csv") + " --k 3", 1},
      {"cv usage", "cv" + data + " --k 1", 2},
      {"tune ok", "tune" + data + " --k 2 --rounds 3 --grid " +
                      DataPath("grid_small.csv").string() + " --out " + P("tune.csv"), 0},
      {"tune domain", "tune --data " + P("zones.csv") + " --grid " +
                          DataPath("grid_small.csv").string(), 1},
      {"tune usage", "tune" + data + " --grid " + P("bad_grid.csv"), 2},
      {"explain ok", "explain" + model + data + " --max-rows 5 --out " + P("e.csv"), 0},
      {"explain domain", "explain --model " + P("bad_model.json") + data + " --out " +
                             P("e2.csv"), 1},
      {"explain usage", "explain" + model + data + " --out " + P("e3.csv") +
                            " --interactions GCD,unknown", 2},
      {"plot ok", "plot importance --in " + P("shap.csv") + data + " --out " + P("i.svg"), 0},
      {"plot domain", "plot importance --in " + P("dataset.csv") + data + " --out " +
                          P("i2.svg"), 1},
      {"plot usage", "plot dependence --in " + P("shap.csv") + data + " --out " + P("i3.svg") +
                         " --feature nope", 2},
      {"plot missing kind", "plot --in " + P("shap.csv") + " --out " + P("i4.svg"), 2},
      {"no subcommand", "", 2},
      {"unknown subcommand", "frobnicate", 2},
      {"help", "--help", 0},
      {"subcommand help", "train --help", 0},
  };
  for (const auto& c : cases) {
    const auto log = P("log.txt");
    EXPECT_EQ(Invoke(c.args, log), c.expected) << c.name << "\n" << Slurp(log);
  }
}

TEST_F(Cli, UsageErrorPrintsHelpHint) {
  const auto log = P("usage.txt");
  EXPECT_EQ(Invoke("train --data " + P("dataset.csv") + " --nope", log), 2);
  const auto text = Slurp(log);
  EXPECT_NE(text.find("--nope"), std::string::npos) << text;
  EXPECT_NE(text.find("--help"), std::string::npos) << text;
}

TEST_F(Cli, StatsOnFixtureMatchesHandValues) {
  ASSERT_EQ(Invoke("stats --data " + DataPath("stats_fixture.csv").string() + " --out " +
                P("fixture_stats.csv")),
            0);
  const auto text = Slurp(P("fixture_stats.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n', text.find('\n') + 1) + 1),
            "variable,mean,median,min,max\nlog_truck_trips,2.25,2.25,0,4.5\n");
  EXPECT_NE(text.find("log_orig_emp,3.9,3.5,1,9\n"), std::string::npos);
}

TEST_F(Cli, RawStatsTableLayout) {
  ASSERT_EQ(Invoke("stats --flows " + DataPath("flows_small.csv").string() + " --zones " +
                    DataPath("zones_small.csv").string() + " --out " + P("raw.csv")),
            0);
  const auto text = Slurp(P("raw.csv"));
  // Five nonzero flows: 30, 83, 100, 5, 7.
  EXPECT_NE(text.find("annual_total_trips,45,30,5,100\n"), std::string::npos) << text;
}

TEST_F(Cli, StatsToStdout) {
  const auto log = P("stdout.txt");
  ASSERT_EQ(Invoke("stats --data " + DataPath("stats_fixture.csv").string(), log), 0);
  EXPECT_EQ(Slurp(log).rfind("variable,mean,median,min,max\n", 0), 0u);
}

TEST_F(Cli, TrainTwiceIdenticalModelFiles) {
  const std::string base = "train --data " + P("dataset.csv") + " --config " +
                           DataPath("train.cfg").string() + " --seed 9 --out ";
  ASSERT_EQ(Invoke(base + P("a.json")), 0);
  ASSERT_EQ(Invoke(base + P("b.json")), 0);
  EXPECT_EQ(Slurp(P("a.json")), Slurp(P("b.json")));
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  ASSERT_EQ(Invoke("train --data " + P("dataset.csv") + " --config " +
                DataPath("train.cfg").string() + " --rounds 7 --out " + P("c.json")),
            0);
  const auto text = Slurp(P("c.json"));
  EXPECT_NE(text.find("\"rounds\": 7"), std::string::npos);
  EXPECT_NE(text.find("\"max_depth\": 3"), std::string::npos);
  std::ofstream(P("bad.cfg")) << "no_such_key = 3\n";
  EXPECT_EQ(Invoke("train --data " + P("dataset.csv") + " --config " + P("bad.cfg")), 2);
  EXPECT_EQ(Invoke("train --data " + P("dataset.csv") + " --config " + P("missing.cfg")), 2);
}

TEST_F(Cli, EvaluateWritesMetricsFile) {
  ASSERT_EQ(Invoke("evaluate --model " + P("model.json") + " --data " + P("dataset.csv") +
                " --out " + P("metrics.csv")),
            0);
  const auto text = Slurp(P("metrics.csv"));
  EXPECT_EQ(text.rfind("n,rmsle,r_squared\n", 0), 0u);
}

TEST_F(Cli, ExplainAndPlotOutputs) {
  const auto shap = Slurp(P("shap.csv"));
  EXPECT_EQ(shap.rfind("origin_zone,destination_zone,base_value,phi_origin_zone_index", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(P("shap_interaction_GCD_orig_pop.csv")));
  for (const std::string kind : {"importance", "beeswarm"}) {
    ASSERT_EQ(Invoke("plot " + kind + " --in " + P("shap.csv") + " --data " + P("dataset.csv") +
                  " --out " + P(kind + ".svg")),
              0);
  }
  ASSERT_EQ(Invoke("plot dependence --feature GCD --in " + P("shap.csv") + " --data " +
                P("dataset.csv") + " --out " + P("dep.svg")),
            0);
  ASSERT_EQ(Invoke("plot interaction --in " + P("shap_interaction_GCD_orig_pop.csv") + " --out " +
                P("int.svg")),
            0);
  for (const std::string f : {"importance.svg", "beeswarm.svg", "dep.svg", "int.svg"}) {
    EXPECT_EQ(Slurp(P(f)).rfind("<?xml", 0), 0u) << f;
  }
}

}  // namespace
