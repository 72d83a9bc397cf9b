// Copyright 2026 The symloss Authors
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

#include "symloss/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace symloss {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "symloss");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("symloss_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& content) const {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  fs::path dir_;
};

const char* kSmallVerify =
    "[verify]\nseed = 5\nlosses = MAE, ZeroOne, CCE, MSE\n"
    "[theorem1]\ninstances = 10\nfamily_size = 10\n"
    "[theorem2]\ninstances = 10\nfamily_size = 10\n"
    "[theorem3]\ninstances = 10\nfamily_size = 10\n"
    "[calibration]\ninstances = 5\nresolution_k2 = 200\nresolution_k3 = 40\n"
    "[counterexample]\nattempts = 300\n";

const char* kSmallExperiment =
    "[data]\nsource = synthetic\nkind = separated-blobs\nk = 3\nd = 2\n"
    "n_train_per_class = 20\nn_test_per_class = 10\nspread = 0.5\nseparation = 1\nseed = 3\n"
    "[train]\nlearning_rate = 0.1\nbatch_size = 8\nepochs = 3\n"
    "[experiment]\nlosses = CCE, MAE, MSE\nnoises = none, symmetric:0.4, classcond:0.2/0.1/0.3\n"
    "seeds = 1, 2, 3, 4, 5, 6\nthreads = 2\n";

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"verify"}).code, kExitUsage);
  EXPECT_EQ(run({"verify", "--config", (dir_ / "missing.ini").string()}).code, kExitUsage);
}

TEST_F(CliTest, VerifyReportsEveryCheck) {
  const auto cfg = write_config("v.ini", kSmallVerify);
  const auto r = run({"verify", "--config", cfg.string(), "--out", (dir_ / "v").string()});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("theorem=1 loss=MAE pass=true"), std::string::npos);
  EXPECT_NE(r.out.find("theorem=1 loss=ZeroOne pass=true"), std::string::npos);
  EXPECT_NE(r.out.find("theorem=1 loss=CCE pass=na"), std::string::npos);
  EXPECT_NE(r.out.find("overall pass=true"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "v" / "verify_report.txt"), r.out);
  EXPECT_TRUE(fs::exists(dir_ / "v" / "cce_counterexample.txt"));
}

TEST_F(CliTest, VerifyConfigErrorsNameTheLine) {
  const auto cfg = write_config("bad.ini", "[verify]\nseed = 5\n");
  const auto r = run({"verify", "--config", cfg.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("losses"), std::string::npos);
  const auto cfg2 = write_config("bad2.ini", "[verify]\nlosses = MAE\n[theorem1]\ninstances = x\n");
  const auto r2 = run({"verify", "--config", cfg2.string()});
  EXPECT_EQ(r2.code, kExitUsage);
  EXPECT_NE(r2.err.find("line 4"), std::string::npos) << r2.err;
}

TEST_F(CliTest, DatagenIsDeterministic) {
  const auto a = dir_ / "a", b = dir_ / "b", c = dir_ / "c";
  const std::vector<std::string> base{"datagen", "--k", "3", "--d", "2", "--n", "15", "--seed", "4"};
  auto with_out = [&](const fs::path& p, std::vector<std::string> extra = {}) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--out");
    args.push_back(p.string());
    return run(args);
  };
  ASSERT_EQ(with_out(a).code, kExitOk);
  ASSERT_EQ(with_out(b).code, kExitOk);
  ASSERT_EQ(with_out(c, {"--separation", "2"}).code, kExitOk);
  EXPECT_EQ(slurp(a / "train.csv"), slurp(b / "train.csv"));
  EXPECT_EQ(slurp(a / "test.csv"), slurp(b / "test.csv"));
  EXPECT_NE(slurp(a / "train.csv"), slurp(c / "train.csv"));

  const LabeledDataset train = load_csv(a / "train.csv");
  const LabeledDataset test = load_csv(a / "test.csv");
  EXPECT_EQ(train.size(), 45u);
  EXPECT_EQ(test.size(), 45u);
  std::set<std::vector<double>> rows;
  for (std::size_t n = 0; n < train.size(); ++n) {
    rows.emplace(train.features.row(n).begin(), train.features.row(n).end());
  }
  for (std::size_t n = 0; n < test.size(); ++n) {
    EXPECT_FALSE(rows.count({test.features.row(n).begin(), test.features.row(n).end()}));
  }
}

TEST_F(CliTest, DatagenRejectsBadArguments) {
  EXPECT_EQ(run({"datagen", "--k", "1", "--out", dir_.string()}).code, kExitUsage);
  EXPECT_EQ(run({"datagen", "--n", "0", "--out", dir_.string()}).code, kExitUsage);
  EXPECT_EQ(run({"datagen", "--kind", "spiral", "--out", dir_.string()}).code, kExitUsage);
  EXPECT_EQ(run({"datagen", "--k", "two"}).code, kExitUsage);
}

TEST_F(CliTest, TrainWritesOneCurvePerRunAndRerunsIdentically) {
  std::string cfg_text = kSmallExperiment;
  cfg_text += "[model]\nhidden = 4\n";
  const auto cfg = write_config("t.ini", cfg_text);
  const auto r1 = run({"train", "--config", cfg.string(), "--out", (dir_ / "r1").string()});
  ASSERT_EQ(r1.code, kExitOk) << r1.err;
  const auto r2 = run({"train", "--config", cfg.string(), "--out", (dir_ / "r2").string()});
  ASSERT_EQ(r2.code, kExitOk);
  EXPECT_EQ(r1.out, r2.out);

  std::size_t runs = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "r1")) {
    const std::string fname = e.path().filename().string();
    if (fname.rfind("run_", 0) != 0) continue;
    ++runs;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "r2" / fname)) << fname;
    std::istringstream in(slurp(e.path()));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "epoch,train_acc,test_acc,train_loss");
    long prev = 0;
    while (std::getline(in, line)) {
      const long epoch = std::stol(line.substr(0, line.find(',')));
      EXPECT_GT(epoch, prev);
      prev = epoch;
    }
    EXPECT_EQ(prev, 3);
  }
  EXPECT_EQ(runs, 54u);
  EXPECT_TRUE(fs::exists(dir_ / "r1" / "run_MAE_symmetric-0.4_1.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "r1" / "run_CCE_classcond-0.2_0.1_0.3_6.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "r1" / "model_MSE_symmetric-0_3.txt"));
}

TEST_F(CliTest, NoiseSettingMustMatchClassCount) {
  std::string text = kSmallExperiment;
  text.replace(text.find("classcond:0.2/0.1/0.3"), 21, "classcond:0.2/0.1");
  const auto cfg = write_config("bad.ini", text);
  const auto r = run({"train", "--config", cfg.string(), "--out", (dir_ / "o").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("classcond:0.2/0.1"), std::string::npos) << r.err;
}

TEST_F(CliTest, SeedOffsetChangesRuns) {
  const auto cfg = write_config("t.ini", kSmallExperiment);
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "a").string()}).code, kExitOk);
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "b").string(), "--seed-offset", "100"})
                .code,
            kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "run_MAE_symmetric-0.4_101.csv"));
}

TEST_F(CliTest, SweepAggregatesEveryCell) {
  const auto cfg = write_config("s.ini", kSmallExperiment);
  const auto r = run({"sweep", "--config", cfg.string(), "--out", (dir_ / "s").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream cells(slurp(dir_ / "s" / "sweep_cells.csv"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(cells, line)) ++n;
  EXPECT_EQ(n, 1u + 54u);
  std::istringstream rows(slurp(dir_ / "s" / "sweep.csv"));
  n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, 1u + 9u);
  EXPECT_EQ(slurp(dir_ / "s" / "sweep_table.txt"), r.out);
  EXPECT_FALSE(fs::exists(dir_ / "s" / "sweep_checks.txt"));
}

TEST_F(CliTest, SweepRecordsDivergedCellsAndContinues) {
  const auto cfg = write_config(
      "d.ini",
      "[data]\nsource = synthetic\nkind = blobs\nk = 3\nd = 2\nn_train_per_class = 10\n"
      "n_test_per_class = 5\nspread = 1e10\nseparation = 1e10\nseed = 1\n"
      "[model]\nhidden = 16, 16\n"
      "[train]\nlearning_rate = 1e300\nepochs = 3\n"
      "[experiment]\nlosses = CCE\nnoises = none\nseeds = 1, 2\n");
  const auto r = run({"sweep", "--config", cfg.string(), "--out", (dir_ / "d").string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const std::string cells = slurp(dir_ / "d" / "sweep_cells.csv");
  EXPECT_NE(cells.find("CCE,symmetric:0,1,nan,\"non-finite value: training diverged"), std::string::npos)
      << cells;
  EXPECT_NE(r.out.find("n/a"), std::string::npos);
}

TEST_F(CliTest, SweepChecksDecideTheExitCode) {
  std::string text = kSmallExperiment;
  text +=
      "[checks]\nrobust_loss = MAE\nfragile_loss = CCE\nclean_noise = symmetric:0\n"
      "noisy_noise = symmetric:0.4\nmax_robust_drop = -1\n";
  const auto cfg = write_config("c.ini", text);
  const auto r = run({"sweep", "--config", cfg.string(), "--out", (dir_ / "c").string()});
  EXPECT_EQ(r.code, kExitCheckFailed);
  EXPECT_NE(r.out.find("check=sweep"), std::string::npos);
  EXPECT_NE(r.out.find("pass=false"), std::string::npos);
}

TEST_F(CliTest, TestSetIsNeverCorrupted) {
  ASSERT_EQ(run({"datagen", "--n", "20", "--n-test", "10", "--seed", "8", "--out", (dir_ / "data").string()})
                .code,
            kExitOk);
  const std::string before = slurp(dir_ / "data" / "test.csv");
  const auto cfg = write_config(
      "csv.ini",
      "[data]\nsource = csv\ntrain_csv = data/train.csv\ntest_csv = data/test.csv\n"
      "[train]\nepochs = 2\n"
      "[experiment]\nlosses = MAE, CCE\nnoises = symmetric:0, symmetric:0.6, cc-random:0.4\nseeds = 1, 2\n");
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--out", (dir_ / "o").string()}).code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "data" / "test.csv"), before);

  // Every cell evaluates against the same labels.
  const ExperimentConfig exp = parse_experiment_config(Config::load(cfg));
  const DataSplit split = exp.data.load();
  const Labels fingerprint = split.test.labels;
  const auto results = run_cells(exp, split);
  EXPECT_EQ(split.test.labels, fingerprint);
  for (const auto& c : results) {
    ASSERT_TRUE(c.ok);
    EXPECT_EQ(c.test_acc, accuracy(*c.model, split.test));
  }
}

TEST_F(CliTest, ConsistencySingleMemberFamilyHasNoGap) {
  const auto cfg = write_config(
      "c.ini", "[consistency]\nk = 3\nd = 2\npopulation_per_class = 50\nns = 10, 100\nseeds = 0, 1\ngrid = 1\n");
  const auto r = run({"consistency", "--config", cfg.string(), "--out", (dir_ / "c").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir_ / "c" / "consistency.csv"), "n,gap\n10,0\n100,0\n");
  EXPECT_NE(r.out.find("family=1 "), std::string::npos);
}

}  // namespace
}  // namespace symloss
