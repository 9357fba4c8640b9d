// Copyright 2026 The EdgeVeil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "edgeveil/harness.h"
#include "test_util.h"

namespace edgeveil {
namespace {

using testing::TempDir;

int run_cli(const std::string& args) {
  std::string command = std::string(EDGEVEIL_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run_cli("synth --nodes 90 --seed 2 --out " + (dir_ / "data").string()), 0);
    testing::write_file(dir_ / "cfg.json",
                        R"({"dataset": "data", "seeds": [0], "ranks": [8],
                            "model": {"epochs": 10},
                            "attack_options": {"pairs_per_class": 30}})");
  }

  std::string config() const { return "--config " + (dir_ / "cfg.json").string(); }

  TempDir dir_;
};

TEST_F(CliTest, RunWritesResults) {
  std::string out = (dir_ / "out").string();
  EXPECT_EQ(run_cli("run " + config() + " --epsilon 2 --mechanism eclipse --mechanism mlp --out " + out), 0);
  ExperimentResult r = read_results(dir_ / "out" / "results.json");
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(*r.records[0].cell.epsilon, 2.0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "out" / "curves.csv"));
}

TEST_F(CliTest, PartialFailureExitsWithTwo) {
  EXPECT_EQ(run_cli("run " + config() + " --rank 8 --rank 1000 --out " + (dir_ / "o").string()), 2);
}

TEST_F(CliTest, ConfigErrorsExitWithOne) {
  EXPECT_EQ(run_cli("run " + config() + " --epsilon -1"), 1);
  EXPECT_EQ(run_cli("run " + config() + " --unperturbed-test"), 1);
  EXPECT_EQ(run_cli("run --config " + (dir_ / "missing.json").string()), 1);
  EXPECT_EQ(run_cli("run"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
}

TEST_F(CliTest, ModelSubcommands) {
  std::string data = (dir_ / "data").string();
  std::string model = (dir_ / "m.txt").string();
  EXPECT_EQ(run_cli("perturb --dataset " + data + " --rank 8 --out " + (dir_ / "p").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "p" / "provenance.json"));
  EXPECT_EQ(run_cli("train --dataset " + data + " --epochs 10 --adjacency " +
                    (dir_ / "p" / "edges.tsv").string() + " --out " + model),
            0);
  EXPECT_EQ(run_cli("attack --model " + model + " --dataset " + data + " --pairs 30"), 0);
  EXPECT_EQ(run_cli("check-assumption --dataset " + data + " --rank 4 --trials 5"), 0);
  EXPECT_EQ(run_cli("attack --model " + (dir_ / "none.txt").string() + " --dataset " + data), 1);
}

}  // namespace
}  // namespace edgeveil
