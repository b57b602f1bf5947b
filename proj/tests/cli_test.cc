//
// Copyright 2026 The Fairmask Authors
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
//

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <set>

#include <gtest/gtest.h>

#include "fairmask/dataset.h"
#include "fairmask/harness.h"
#include "fairmask/measures.h"
#include "json.hpp"
#include "test_support.h"

namespace fairmask {
namespace {

using nlohmann::json;

struct RunResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout; stderr is discarded.
RunResult run(const std::string& args) {
  const std::string cmd =
      std::string("\"") + FAIRMASK_CLI_PATH + "\" " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buffer[4096];
  std::size_t got;
  while ((got = fread(buffer, 1, sizeof buffer, pipe)) > 0) r.out.append(buffer, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

EncodedDataset load_biased(const std::string& path) {
  ColumnRoles roles{.label_column = "y", .protected_column = "group"};
  roles.feature_columns = infer_feature_columns(read_csv_header(path), "y", "group");
  return load_csv(path, roles);
}

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {
    biased_ = dir_.file("biased.csv");
    write_csv(DatasetView(std::make_shared<const EncodedDataset>(
                  make_biased_dataset({.n = 300, .seed = 3}))),
              biased_);
  }
  std::string roles() const {
    return "--input " + q(biased_) + " --label y --protected group";
  }

  testing::TempDir dir_;
  std::string biased_;
};

TEST_F(CliTest, MeasureParityIsZero) {
  const std::string path = dir_.file("parity.csv");
  testing::write_text(path, "x,y,z\n1,1,a\n2,0,a\n3,1,b\n4,0,b\n");
  const RunResult r = run("measure --input " + q(path) + " --label y --protected z");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["sdp_sum"].get<double>(), 0.0);
  EXPECT_EQ(j["sdp_max"].get<double>(), 0.0);
  EXPECT_EQ(j["k"].get<int>(), 2);
  EXPECT_EQ(j["n"].get<int>(), 4);
}

TEST_F(CliTest, MeasureExtremeRates) {
  const std::string path = dir_.file("extreme.csv");
  testing::write_text(path, "x,y,z\n1,yes,a\n2,yes,a\n3,no,b\n4,no,b\n");
  const RunResult r = run("measure --input " + q(path) +
                          " --label y --protected z --positive yes");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["sdp_sum"].get<double>(), 1.0);
  EXPECT_EQ(j["sdp_max"].get<double>(), 1.0);
  EXPECT_EQ(j["groups"][0]["rate"].get<double>(), 1.0);
  EXPECT_EQ(j["groups"][1]["rate"].get<double>(), 0.0);
}

TEST_F(CliTest, MeasureMatchesLibrary) {
  const RunResult r = run("measure " + roles());
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  auto d = std::make_shared<const EncodedDataset>(load_biased(biased_));
  EXPECT_DOUBLE_EQ(j["sdp_sum"].get<double>(),
                   evaluate(BuiltinMeasure::kSdpSum, DatasetView(d)));
  EXPECT_DOUBLE_EQ(j["sdp_max"].get<double>(),
                   evaluate(BuiltinMeasure::kSdpMax, DatasetView(d)));
}

TEST_F(CliTest, GenerateIsSeededAndLoadsBack) {
  const std::string a = dir_.file("a.csv"), b = dir_.file("b.csv");
  ASSERT_EQ(run("generate " + roles() + " --seed 5 --output " + q(a)).code, 0);
  ASSERT_EQ(run("generate " + roles() + " --seed 5 --output " + q(b)).code, 0);
  EXPECT_EQ(testing::read_text(a), testing::read_text(b));
  const auto real = load_biased(biased_);
  const auto synth = load_csv_like(a, real);
  EXPECT_EQ(synth.n(), real.n());
  EXPECT_EQ(synth.schema(), real.schema());

  ASSERT_EQ(run("generate " + roles() + " --seed 6 --rows 40 --output " + q(b)).code, 0);
  EXPECT_EQ(load_csv_like(b, real).n(), 40u);
}

TEST_F(CliTest, GenerateExternalCopiesFile) {
  const std::string synth = dir_.file("synth.csv"), copy = dir_.file("copy.csv");
  ASSERT_EQ(run("generate " + roles() + " --seed 1 --output " + q(synth)).code, 0);
  ASSERT_EQ(run("generate " + roles() + " --external " + q(synth) + " --output " +
                q(copy))
                .code,
            0);
  EXPECT_EQ(testing::read_text(synth), testing::read_text(copy));
  testing::write_text(synth, "income,age,sector,y,group\n1,2,unknown,1,g1\n");
  EXPECT_EQ(run("generate " + roles() + " --external " + q(synth) + " --output " +
                q(copy))
                .code,
            2);
}

TEST_F(CliTest, OriginalRemoveReproducesInput) {
  const std::string out = dir_.file("fair.csv");
  const RunResult r =
      run("optimize " + roles() + " --mode remove --solver original --output " + q(out));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(testing::read_text(out), testing::read_text(biased_));
  const json j = json::parse(r.out);
  EXPECT_EQ(j["popcount"].get<int>(), 300);
  EXPECT_EQ(j["before"], j["after"]);
}

TEST_F(CliTest, PrivacyOutputHasNoRealRows) {
  const std::string synth = dir_.file("synth.csv"), out = dir_.file("fair.csv");
  ASSERT_EQ(run("generate " + roles() + " --seed 2 --output " + q(synth)).code, 0);
  ASSERT_EQ(run("optimize " + roles() + " --mode privacy --synthetic " + q(synth) +
                " --pop 20 --gens 10 --output " + q(out))
                .code,
            0);
  auto lines = [](const std::string& text) {
    std::set<std::string> rows;
    std::size_t start = text.find('\n') + 1;
    while (start < text.size()) {
      const std::size_t end = text.find('\n', start);
      rows.insert(text.substr(start, end - start));
      start = end + 1;
    }
    return rows;
  };
  const auto real = lines(testing::read_text(biased_));
  const auto fair = lines(testing::read_text(out));
  EXPECT_FALSE(fair.empty());
  for (const auto& row : fair) EXPECT_FALSE(real.count(row)) << row;
}

TEST_F(CliTest, OptimizeNeverWorsensAcrossSeeds) {
  const std::string out = dir_.file("fair.csv");
  for (int seed = 0; seed < 15; ++seed) {
    const RunResult r = run("optimize " + roles() + " --pop 16 --gens 8 --seed " +
                            std::to_string(seed) + " --output " + q(out));
    ASSERT_EQ(r.code, 0);
    const json j = json::parse(r.out);
    EXPECT_LE(j["after"]["sdp_sum"].get<double>(),
              j["before"]["sdp_sum"].get<double>() + 1e-12);
    EXPECT_EQ(j["seed"].get<int>(), seed);
  }
}

TEST_F(CliTest, ReportFileAndProvenance) {
  const std::string out = dir_.file("fair.csv"), report = dir_.file("report.json");
  const RunResult r = run("optimize " + roles() +
                          " --mode add --rows 60 --pop 10 --gens 5 --provenance source"
                          " --report " + q(report) + " --output " + q(out));
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  const json j = json::parse(testing::read_text(report));
  EXPECT_EQ(j["pool_size"].get<int>(), 60);
  EXPECT_EQ(j["fixed_rows"].get<int>(), 300);
  EXPECT_EQ(j["output_rows"].get<int>(), 300 + j["popcount"].get<int>());
  EXPECT_EQ(j["config"]["mode"], "add");
  const auto fair = read_csv_header(out);
  EXPECT_EQ(fair.back(), "source");
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  const std::string cfg = dir_.file("cfg.json"), out = dir_.file("fair.csv");
  testing::write_text(cfg, R"({"mode": "remove", "solver": "random", "budget": 7,
                               "seed": 4})");
  RunResult r = run("optimize --config " + q(cfg) + " " + roles() + " --seed 9 --output " +
                    q(out));
  ASSERT_EQ(r.code, 0);
  json j = json::parse(r.out);
  EXPECT_EQ(j["evaluations"].get<int>(), 7);
  EXPECT_EQ(j["seed"].get<int>(), 9);

  testing::write_text(cfg, R"({"nonsense": 1})");
  EXPECT_EQ(run("optimize --config " + q(cfg) + " " + roles() + " --output " + q(out)).code,
            2);
  testing::write_text(cfg, R"({"pop": "many"})");
  EXPECT_EQ(run("optimize --config " + q(cfg) + " " + roles() + " --output " + q(out)).code,
            2);
}

TEST_F(CliTest, BenchmarkWritesFifteenTrialsPerCell) {
  const std::string plan = dir_.file("plan.json"), out = dir_.file("results");
  testing::write_text(plan, R"({"datasets": [{"name": "toy", "biased": {"n": 200}}],
      "modes": ["remove"], "measures": ["sdp_sum", "sdp_max"],
      "solvers": [{"solver": "original"},
                  {"solver": "ga", "pop": 10, "gens": 5}]})");
  const RunResult r = run("benchmark --plan " + q(plan) + " --out " + q(out));
  ASSERT_EQ(r.code, 0);
  const std::string raw = testing::read_text(out + "/results_raw.jsonl");
  EXPECT_EQ(std::count(raw.begin(), raw.end(), '\n'), 4 * 15);
  const ResultTable t = run_plan(load_plan(plan));
  ASSERT_EQ(t.cells.size(), 4u);
  // Runtimes differ between runs; every other column must match.
  for (std::size_t c = 0; c < 4; ++c) {
    for (const auto& rec : t.records) {
      if (rec.measure == t.cells[c].measure && rec.solver == t.cells[c].solver) {
        EXPECT_NE(raw.find("\"best_mask\":\"" + rec.best_mask + "\""), std::string::npos);
      }
    }
  }
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            format_table_csv(t.cells, false).substr(0, r.out.find('\n')));
}

TEST_F(CliTest, BenchmarkNamesMissingKeys) {
  const std::string plan = dir_.file("plan.json");
  testing::write_text(plan, "{}");
  const std::string cmd = std::string("\"") + FAIRMASK_CLI_PATH + "\" benchmark --plan " +
                          q(plan) + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string text;
  char buffer[512];
  std::size_t got;
  while ((got = fread(buffer, 1, sizeof buffer, pipe)) > 0) text.append(buffer, got);
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 2);
  for (const char* key : {"datasets", "modes", "measures", "solvers"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("measure --input " + q(dir_.file("missing.csv")) +
                " --label y --protected z")
                .code,
            2);
  EXPECT_EQ(run("measure " + roles() + " --label nope").code, 2);
  EXPECT_EQ(run("optimize " + roles() + " --mode sideways --output x.csv").code, 2);
  EXPECT_EQ(run("optimize " + roles() + " --pop 1 --output x.csv").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

}  // namespace
}  // namespace fairmask
