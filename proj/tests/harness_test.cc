// Copyright 2026 The PrefAlign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "prefalign/harness/config.h"
#include "prefalign/harness/plot.h"
#include "prefalign/harness/records.h"
#include "prefalign/harness/runner.h"
#include "test_util.h"

namespace prefalign {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing_util::ThrowsCode;

// Error message of a ConfigError raised while parsing `j`.
std::string ConfigErrorOf(const json& j) {
  try {
    ParseConfig(j);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) return e.what();
    return std::string("wrong code: ") + e.what();
  }
  return "no error";
}

json SmallOffline() {
  return json::parse(R"({
    "experiment": "offline",
    "env": {"prompts": 3, "responses": 4},
    "class": {"size": 8},
    "noise": {"epsilons": [1.0, "inf"], "alphas": [0.0, 0.1],
              "orderings": ["CTL"]},
    "sizes": [200],
    "seeds": {"base": 5, "replicates": 3}
  })");
}

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Records CSV with the wall_time column removed.
std::string StripWallTime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    out += line.substr(0, line.rfind(',')) + "\n";
  }
  return out;
}

std::string RecordsText(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  WriteRecordsHeader(out);
  for (const RunRecord& r : records) WriteRecordRow(out, r);
  return out.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("prefalign_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
}

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PREFALIGN_CLI_PATH) + " " + args +
                          " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ConfigTest, DefaultsFollowExperiment) {
  const ExperimentConfig off = ParseConfig(json::object());
  EXPECT_EQ(off.experiment, Experiment::kOffline);
  EXPECT_EQ(off.solver, Solver::kPrivChipo);
  EXPECT_EQ(off.policy_class.regularizer, Regularizer::kChiMix);
  EXPECT_EQ(off.env.prompts, 4u);
  EXPECT_EQ(off.env.responses, 6u);
  EXPECT_EQ(off.policy_class.size, 32u);
  EXPECT_EQ(off.env.r_max, 2.0);
  const ExperimentConfig on = ParseConfig(json{{"experiment", "online"}});
  EXPECT_EQ(on.solver, Solver::kSquareXpo);
  EXPECT_EQ(on.policy_class.regularizer, Regularizer::kKl);
}

TEST(ConfigTest, ErrorsCarryFieldPaths) {
  EXPECT_NE(ConfigErrorOf(json{{"bogus", 1}}).find("bogus"),
            std::string::npos);
  json bad_alpha = SmallOffline();
  bad_alpha["noise"]["alphas"] = {0.1, 0.7};
  EXPECT_NE(ConfigErrorOf(bad_alpha).find("noise.alphas"), std::string::npos);
  json nested = SmallOffline();
  nested["env"]["colour"] = "red";
  EXPECT_NE(ConfigErrorOf(nested).find("env.colour"), std::string::npos);
  json empty_grid = SmallOffline();
  empty_grid["sizes"] = json::array();
  EXPECT_NE(ConfigErrorOf(empty_grid).find("sizes"), std::string::npos);
  json mismatch = SmallOffline();
  mismatch["solver"] = "square_xpo";
  EXPECT_NE(ConfigErrorOf(mismatch).find("solver"), std::string::npos);
  json priv_xpo = json::parse(
      R"({"experiment": "online", "solver": "priv_xpo",
          "noise": {"orderings": ["LTC"], "alphas": [0.1]}})");
  EXPECT_NE(ConfigErrorOf(priv_xpo).find("noise.orderings"),
            std::string::npos);
  json zero_reps = SmallOffline();
  zero_reps["seeds"]["replicates"] = 0;
  EXPECT_NE(ConfigErrorOf(zero_reps).find("seeds.replicates"),
            std::string::npos);
}

TEST(ConfigTest, RoundTripsThroughJson) {
  json j = SmallOffline();
  j["noise"]["adversaries"] = {"AlwaysFlip", "BernoulliPlus(0.25)"};
  j["gamma"] = 0.5;
  const ExperimentConfig a = ParseConfig(j);
  EXPECT_TRUE(std::isinf(a.noise.epsilons[1]));
  const json encoded = ConfigToJson(a);
  const ExperimentConfig b = ParseConfig(encoded);
  EXPECT_EQ(ConfigToJson(b).dump(), encoded.dump());
}

TEST(ConfigTest, LemmaNeighbors) {
  const json j = json::parse(R"({"lemma": {"neighbors": {
      "truth": [0.7, 0.4], "count": 5, "min_step": 0.01, "max_step": 0.2,
      "lo": 0.02, "hi": 0.98, "seed": 3}}})");
  const ExperimentConfig c = ParseConfig(j);
  ASSERT_TRUE(c.lemma.has_value());
  ASSERT_EQ(c.lemma->models.size(), 6u);
  EXPECT_EQ(c.lemma->models[0], (std::vector<double>{0.7, 0.4}));
  EXPECT_EQ(c.lemma->context_weights, (std::vector<double>{0.5, 0.5}));
  json both = j;
  both["lemma"]["models"] = {{0.5, 0.5}};
  EXPECT_NE(ConfigErrorOf(both).find("lemma.models"), std::string::npos);
}

TEST(FormatDoubleTest, Values) {
  EXPECT_EQ(FormatDouble(INFINITY), "inf");
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
  EXPECT_EQ(FormatDouble(2.0), "2");
}

TEST(EnumerateCellsTest, Cardinality) {
  json one = SmallOffline();
  one["noise"] = json::object();
  one["seeds"]["replicates"] = 1;
  EXPECT_EQ(EnumerateCells(ParseConfig(one)).size(), 1u);
  const auto cells = EnumerateCells(ParseConfig(SmallOffline()));
  ASSERT_EQ(cells.size(), 12u);
  EXPECT_EQ(cells[0].replicate, 0u);
  EXPECT_EQ(cells[1].replicate, 1u);
  EXPECT_EQ(cells[3].noise.alpha, 0.1);
}

TEST(RunSweepTest, DeterministicAndIndependentOfWorkers) {
  const ExperimentConfig c = ParseConfig(SmallOffline());
  const auto a = RunSweep(c, SweepOptions{std::nullopt, 1});
  const auto b = RunSweep(c, SweepOptions{std::nullopt, 4});
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(StripWallTime(RecordsText(a)), StripWallTime(RecordsText(b)));
  for (const RunRecord& r : a) EXPECT_GE(r.gap, -1e-9);
}

TEST(RunSweepTest, WritesRecordsIncrementally) {
  const fs::path dir = FreshDir("sweep_file");
  const ExperimentConfig c = ParseConfig(SmallOffline());
  const auto records =
      RunSweep(c, SweepOptions{(dir / "records.csv").string(), 2});
  EXPECT_EQ(ReadAll(dir / "records.csv"), RecordsText(records));
  EXPECT_TRUE(ThrowsCode(
      [&] {
        ExperimentConfig bad = c;
        bad.sizes.clear();
        RunSweep(bad);
      },
      ErrorCode::kConfigError));
}

TEST(RunSweepTest, OnlineSolversRun) {
  for (const char* solver : {"priv_xpo", "square_xpo"}) {
    json j = json::parse(R"({"experiment": "online", "class": {"size": 6},
        "noise": {"epsilons": [1.0], "orderings": ["PrivacyOnly"]},
        "sizes": [30], "gamma": "theory", "seeds": {"replicates": 2}})");
    j["solver"] = solver;
    const auto records = RunSweep(ParseConfig(j));
    ASSERT_EQ(records.size(), 2u);
    for (const RunRecord& r : records) {
      EXPECT_GT(r.gamma, 0.0);
      EXPECT_GE(r.gap, -1e-9);
    }
  }
}

TEST(RunSweepTest, RecordsReproduceFromResolvedSingleRun) {
  const ExperimentConfig c = ParseConfig(SmallOffline());
  const auto records = RunSweep(c);
  for (std::size_t i : {0u, 5u, 11u}) {
    const ExperimentConfig single = ResolveSingleRun(c, records[i]);
    const auto again = RunSweep(single);
    ASSERT_EQ(again.size(), 1u);
    EXPECT_EQ(again[0].gap, records[i].gap);
    EXPECT_EQ(again[0].chosen_index, records[i].chosen_index);
    EXPECT_EQ(again[0].seed, records[i].seed);
  }
}

TEST(RecordsCsvTest, RoundTripAndTruncation) {
  const auto records = RunSweep(ParseConfig(SmallOffline()));
  const std::string text = RecordsText(records);
  std::istringstream in(text);
  const auto parsed = ReadRecordsCsv(in);
  EXPECT_EQ(RecordsText(parsed), text);
  // An interrupted final line is dropped, completed ones survive.
  std::istringstream cut(text.substr(0, text.size() - 7));
  EXPECT_EQ(ReadRecordsCsv(cut).size(), records.size() - 1);
  std::istringstream bad(RecordColumns()[0] + "\nnot,a,record\n");
  EXPECT_TRUE(ThrowsCode([&] { ReadRecordsCsv(bad); }, ErrorCode::kIoError));
}

TEST(RecordsCsvTest, FieldViews) {
  RunRecord r;
  r.size = 400;
  r.epsilon = INFINITY;
  r.gap = 0.25;
  EXPECT_EQ(RecordValue(r, "n"), 400.0);
  EXPECT_EQ(RecordValue(r, "T"), 400.0);
  EXPECT_EQ(RecordText(r, "epsilon"), "inf");
  EXPECT_EQ(RecordValue(r, "gap"), 0.25);
}

std::vector<RunRecord> PowerLaw(double exponent, double scale) {
  std::vector<RunRecord> out;
  for (double x : {100.0, 400.0, 1600.0, 6400.0}) {
    for (int rep = 0; rep < 3; ++rep) {
      RunRecord r;
      r.size = static_cast<std::size_t>(x);
      r.replicate = rep;
      r.gap = scale * std::pow(x, exponent) * (rep == 1 ? 1.0 : 1.0 + rep);
      out.push_back(r);
    }
  }
  return out;
}

TEST(FitScalingTest, PlantedLines) {
  const LineFit half = FitScaling(PowerLaw(-0.5, 1.0), "n", "gap");
  EXPECT_NEAR(half.slope, -0.5, 1e-12);
  EXPECT_NEAR(half.r2, 1.0, 1e-12);
  EXPECT_NEAR(FitScaling(PowerLaw(2.0, 3.0), "size", "gap").slope, 2.0,
              1e-12);
  std::vector<RunRecord> two = PowerLaw(1.0, 1.0);
  two.resize(6);
  EXPECT_TRUE(ThrowsCode([&] { FitScaling(two, "n", "gap"); },
                         ErrorCode::kDegenerateFit));
}

TEST(SummaryCsvTest, OneRowPerCell) {
  const auto records = RunSweep(ParseConfig(SmallOffline()));
  std::ostringstream out;
  WriteSummaryCsv(out, records);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1 + 4);
}

std::vector<RunRecord> TwoPoints() {
  std::vector<RunRecord> out(2);
  out[0].size = 100;
  out[0].gap = 0.1;
  out[1].size = 1000;
  out[1].gap = 0.01;
  return out;
}

std::size_t CountOf(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

TEST(PlotTest, MarkersDeterminismAndLogTicks) {
  PlotSpec spec;
  const std::string svg = EmitPlot(TwoPoints(), spec);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(CountOf(svg, "class=\"marker\""), 2u);
  EXPECT_EQ(EmitPlot(TwoPoints(), spec), svg);
  spec.log_x = true;
  spec.log_y = true;
  const std::string log_svg = EmitPlot(TwoPoints(), spec);
  EXPECT_NE(log_svg.find(">1e2<"), std::string::npos);
  EXPECT_NE(log_svg.find(">1e3<"), std::string::npos);
  EXPECT_NE(log_svg.find(">1e-2<"), std::string::npos);
}

TEST(PlotTest, EmptyInput) {
  EXPECT_TRUE(ThrowsCode([] { EmitPlot({}, PlotSpec{}); },
                         ErrorCode::kEmptyData));
  std::vector<RunRecord> zero(1);
  PlotSpec spec;
  spec.log_y = true;
  EXPECT_TRUE(
      ThrowsCode([&] { EmitPlot(zero, spec); }, ErrorCode::kEmptyData));
}

TEST(PlotTest, ParseSpec) {
  const PlotSpec spec = ParsePlotSpec(json::parse(
      R"({"x": "n", "series": "epsilon", "log_x": true, "title": "gap"})"));
  EXPECT_EQ(spec.x_field, "n");
  EXPECT_EQ(spec.series_field, "epsilon");
  EXPECT_TRUE(spec.log_x);
  EXPECT_FALSE(spec.log_y);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = FreshDir(::testing::UnitTest::GetInstance()
                        ->current_test_info()
                        ->name());
  }
  fs::path dir_;
};

TEST_F(CliTest, RunOfflineWritesRecordsAndSummary) {
  WriteJson(dir_ / "c.json", SmallOffline());
  const fs::path out = dir_ / "d";
  EXPECT_EQ(RunCli("run-offline --config " + (dir_ / "c.json").string() +
                       " --seed 7 --out " + out.string(),
                   dir_ / "log.txt"),
            0)
      << ReadAll(dir_ / "log.txt");
  EXPECT_TRUE(fs::exists(out / "records.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "config.resolved.json"));
  std::ifstream in(out / "records.csv");
  const auto records = ReadRecordsCsv(in);
  ASSERT_EQ(records.size(), 12u);
}

TEST_F(CliTest, ByteReproducibleAcrossWorkers) {
  WriteJson(dir_ / "c.json", SmallOffline());
  const std::string base =
      "run-offline --config " + (dir_ / "c.json").string() + " --seed 9";
  ASSERT_EQ(RunCli(base + " --workers 1 --out " + (dir_ / "a").string(),
                   dir_ / "a.txt"),
            0);
  ASSERT_EQ(RunCli(base + " --workers 3 --out " + (dir_ / "b").string(),
                   dir_ / "b.txt"),
            0);
  EXPECT_EQ(StripWallTime(ReadAll(dir_ / "a" / "records.csv")),
            StripWallTime(ReadAll(dir_ / "b" / "records.csv")));
  EXPECT_EQ(ReadAll(dir_ / "a" / "config.resolved.json"),
            ReadAll(dir_ / "b" / "config.resolved.json"));
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  WriteJson(dir_ / "c.json", SmallOffline());
  EXPECT_EQ(RunCli("run-offline --config " + (dir_ / "c.json").string() +
                       " --frobnicate",
                   dir_ / "log.txt"),
            2);
  EXPECT_NE(ReadAll(dir_ / "log.txt").find("Usage"), std::string::npos);
}

TEST_F(CliTest, ConfigErrorExitsTwo) {
  json bad = SmallOffline();
  bad["noise"]["alphas"] = {0.9};
  WriteJson(dir_ / "c.json", bad);
  EXPECT_EQ(RunCli("run-offline --config " + (dir_ / "c.json").string() +
                       " --out " + (dir_ / "d").string(),
                   dir_ / "log.txt"),
            2);
  EXPECT_NE(ReadAll(dir_ / "log.txt").find("noise.alphas"), std::string::npos);
  EXPECT_EQ(RunCli("run-offline --config " + (dir_ / "missing.json").string(),
                   dir_ / "log2.txt"),
            2);
}

TEST_F(CliTest, FailedAssertionExitsThree) {
  json j = SmallOffline();
  j["assert"] = {{"max_median_gap", -1.0}};
  WriteJson(dir_ / "c.json", j);
  const std::string cmd = "run-offline --config " +
                          (dir_ / "c.json").string() + " --out " +
                          (dir_ / "d").string();
  EXPECT_EQ(RunCli(cmd, dir_ / "log.txt"), 0);
  EXPECT_EQ(RunCli(cmd + " --assert", dir_ / "log.txt"), 3);
}

TEST_F(CliTest, VerifyLemmaSquareAssertPassesWithoutCorruption) {
  const json j = json::parse(R"({
    "noise": {"epsilons": [1.0], "alphas": [0.0], "orderings": ["CTL", "LTC"]},
    "seeds": {"base": 3},
    "lemma": {"neighbors": {"truth": [0.6, -0.2, 0.3, -0.5], "count": 12,
                            "min_step": 0.01, "max_step": 0.6,
                            "lo": -1, "hi": 1, "seed": 1},
              "n": 1000, "trials": 20}
  })");
  WriteJson(dir_ / "c.json", j);
  EXPECT_EQ(RunCli("verify-lemma-square --assert --config " +
                       (dir_ / "c.json").string() + " --out " +
                       (dir_ / "d").string(),
                   dir_ / "log.txt"),
            0)
      << ReadAll(dir_ / "log.txt");
  EXPECT_TRUE(fs::exists(dir_ / "d" / "calibration.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "d" / "summary.csv"));
}

TEST_F(CliTest, PlotSubcommand) {
  WriteJson(dir_ / "c.json", SmallOffline());
  ASSERT_EQ(RunCli("run-offline --config " + (dir_ / "c.json").string() +
                       " --out " + (dir_ / "d").string(),
                   dir_ / "log.txt"),
            0);
  WriteJson(dir_ / "p.json",
            json{{"records", "d/records.csv"}, {"x", "alpha"},
                 {"series", "epsilon"}, {"output", "fig.svg"}});
  EXPECT_EQ(RunCli("plot --config " + (dir_ / "p.json").string() + " --out " +
                       (dir_ / "figs").string(),
                   dir_ / "plot.txt"),
            0)
      << ReadAll(dir_ / "plot.txt");
  EXPECT_TRUE(fs::exists(dir_ / "figs" / "fig.svg"));
}

}  // namespace
}  // namespace prefalign
