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

#include "histosynth/config/run_config.h"
#include "test_util.h"

namespace histosynth::config {
namespace {

TEST(RunConfigTest, DefaultsWhenEmpty) {
  const RunConfig c = ParseRunConfig("");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.data.corpus_size, 200);
  EXPECT_DOUBLE_EQ(c.mask.mean_distance, 15.0);
  EXPECT_EQ(c.eval.frequencies, (std::vector<double>{4, 16, 64}));
  EXPECT_EQ(c.generator, gan::GeneratorConfig::Desk());
}

TEST(RunConfigTest, ParsesSectionsAndPropagatesSeed) {
  const RunConfig c = ParseRunConfig(R"(
seed = 42
# comment
[mask]
mean_distance = 8.5
resolution = "polygons"
threshold_mode = "otsu"

[train]
loss_mode = "lsgan"
max_steps = 300

[eval]
embedders = ["toy", "projection"]
frequencies = [2, 5, 10.5]
)");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.seg.seed, 42u);
  EXPECT_DOUBLE_EQ(c.mask.mean_distance, 8.5);
  EXPECT_EQ(c.mask.thresholds.mode, mask::ThresholdSpec::Mode::kOtsu);
  EXPECT_EQ(c.train.loss_mode, gan::GanLossMode::kLsgan);
  EXPECT_EQ(c.train_max_steps, 300);
  EXPECT_EQ(c.eval.embedders, (std::vector<std::string>{"toy", "projection"}));
  EXPECT_EQ(c.eval.frequencies, (std::vector<double>{2, 5, 10.5}));
}

TEST(RunConfigTest, UnknownKeyReportsLine) {
  try {
    ParseRunConfig("seed = 1\n[mask]\nmean_distanse = 3\n");
    FAIL() << "typo accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("mean_distanse"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
}

TEST(RunConfigTest, RejectsBadValues) {
  EXPECT_THROW(ParseRunConfig("[mask]\nmean_distance = \"far\"\n"), ConfigError);
  EXPECT_THROW(ParseRunConfig("[mask]\nresolution = \"voxels\"\n"), ConfigError);
  EXPECT_THROW(ParseRunConfig("[generator]\nbase_channels = 0\n"), ConfigError);
  EXPECT_THROW(ParseRunConfig("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(ParseRunConfig("[unknown]\nx = 1\n"), ConfigError);
  EXPECT_THROW(ParseRunConfig("seed 1\n"), ConfigError);
}

TEST(RunConfigTest, FormatRoundTrips) {
  RunConfig c = ParseRunConfig("seed = 9\n[data]\nsplit_fraction = 0.8\n[eval]\nfrequencies = [3, 7.25]\n");
  const std::string text = FormatRunConfig(c);
  EXPECT_NE(text.find("split_fraction = 0.8\n"), std::string::npos);
  EXPECT_EQ(FormatRunConfig(ParseRunConfig(text)), text);
}

TEST(RunConfigTest, EchoWritesConfigFile) {
  testing::TempDir dir("echo");
  const RunConfig c = ParseRunConfig("seed = 3\n");
  EchoRunConfig(c, dir.path());
  EXPECT_EQ(testing::ReadFile(dir / "configs/run_config.toml"), FormatRunConfig(c));
  EXPECT_EQ(FormatRunConfig(LoadRunConfig(dir / "configs/run_config.toml")), FormatRunConfig(c));
}

}  // namespace
}  // namespace histosynth::config
