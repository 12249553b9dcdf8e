// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
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
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "histosynth/core/png_io.h"
#include "histosynth/mask/synthesize.h"
#include "test_util.h"

namespace histosynth {
namespace {

int RunCli(const std::string& args) {
  const std::string cmd = std::string(HISTOSYNTH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("bogus"), 2);
  EXPECT_EQ(RunCli("demo --no-such-flag --out /tmp/x"), 2);
  EXPECT_EQ(RunCli("mask noise --mean-distance 15"), 2);
  EXPECT_EQ(RunCli("--help"), 0);
}

TEST(CliTest, RuntimeFailureExitsOne) {
  testing::TempDir dir("cli");
  std::ofstream(dir / "garbage.ckpt") << "not a checkpoint";
  std::filesystem::create_directories(dir / "masks");
  core::WriteMaskPng(dir / "masks" / "m.png", core::LabelGrid(16, 16));
  EXPECT_EQ(RunCli("gan synth --checkpoint " + (dir / "garbage.ckpt").string() + " --masks " +
                   (dir / "masks").string() + " --out " + (dir / "out").string()),
            1);
  std::ofstream(dir / "bad.toml") << "[mask]\nmean_distanse = 3\n";
  EXPECT_EQ(RunCli("--config " + (dir / "bad.toml").string() + " mask synth --tps 0.3 --out " + (dir / "o2").string()),
            1);
}

TEST(CliTest, MaskNoiseIsReproducible) {
  testing::TempDir dir("cli");
  core::WriteMaskPng(dir / "tile.png", mask::synthesize_mask(0.4, mask::MaskLayout{}, 128, 64, 1));
  const std::string base = "--seed 7 mask noise --mean-distance 15 --mask " + (dir / "tile.png").string() + " --out ";
  ASSERT_EQ(RunCli(base + (dir / "a").string()), 0);
  ASSERT_EQ(RunCli(base + (dir / "b").string()), 0);
  const std::string a = testing::ReadFile(dir / "a/masks/tile.png");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, testing::ReadFile(dir / "b/masks/tile.png"));
  const std::string cfg = testing::ReadFile(dir / "a/configs/run_config.toml");
  EXPECT_NE(cfg.find("seed = 7\n"), std::string::npos);
  EXPECT_EQ(cfg, testing::ReadFile(dir / "b/configs/run_config.toml"));
  const core::LabelGrid noisy = core::ReadMaskPng(dir / "a/masks/tile.png");
  EXPECT_TRUE(noisy.HasAuxiliaryLabels());
}

TEST(CliTest, DemoProducesReport) {
  testing::TempDir dir("demo");
  ASSERT_EQ(RunCli("--seed 1 demo --out " + (dir / "run").string()), 0);
  for (const char* sub : {"configs/run_config.toml", "checkpoints", "reports/fd_report.json", "images"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / sub)) << sub;
  }
  std::ifstream in(dir / "run/reports/fd_report.json");
  const nlohmann::json report = nlohmann::json::parse(in);
  EXPECT_FALSE(report.empty());
}

}  // namespace
}  // namespace histosynth
