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

#include <map>
#include <stdexcept>

#include "histosynth/core/label_grid.h"
#include "histosynth/core/manifest.h"
#include "histosynth/core/png_io.h"
#include "histosynth/core/tps.h"
#include "test_util.h"

namespace histosynth::core {
namespace {

using testing::RandomGrid;
using testing::TempDir;

TEST(TpsTest, AllPositiveIsOne) {
  LabelGrid g(8, 4, ClassId::kPdl1Pos);
  EXPECT_EQ(compute_tps(g), 1.0);
}

TEST(TpsTest, NoTumorIsZero) {
  LabelGrid g(8, 4, ClassId::kOther);
  g.set(0, 0, ClassId::kInflammation);
  EXPECT_EQ(compute_tps(g), 0.0);
}

TEST(TpsTest, ThreeHundredOfFourHundred) {
  LabelGrid g(40, 20, ClassId::kInflammation);
  int k = 0;
  for (ClassId& id : g.labels()) {
    if (k < 300) id = ClassId::kPdl1Pos;
    else if (k < 400) id = ClassId::kPdl1Neg;
    ++k;
  }
  g.set(39, 19, ClassId::kOther);
  EXPECT_DOUBLE_EQ(compute_tps(g), 0.75);
}

TEST(TpsTest, AuxiliaryLabelsDoNotCount) {
  LabelGrid g(4, 1, ClassId::kPdl1Pos, Resolution::kPolygonsNoise);
  g.set(0, 0, ClassId::kPdl1Neg);
  g.set(1, 0, ClassId::kNoise);
  EXPECT_DOUBLE_EQ(compute_tps(g), 2.0 / 3.0);
}

TEST(TpsClassTest, Bands) {
  EXPECT_EQ(tps_class(0.0), TpsClass::kLow);
  EXPECT_EQ(tps_class(0.5), TpsClass::kHigh);
  EXPECT_EQ(tps_class(1.0), TpsClass::kHigh);
  EXPECT_EQ(tps_class(0.3), TpsClass::kMid);
}

TEST(TpsClassTest, BoundariesAreStable) {
  EXPECT_EQ(tps_class(0.5 - 1e-9), TpsClass::kMid);
  EXPECT_EQ(tps_class(0.5 + 1e-9), TpsClass::kHigh);
  EXPECT_EQ(tps_class(0.01 - 1e-9), TpsClass::kLow);
  EXPECT_EQ(tps_class(0.01 + 1e-9), TpsClass::kMid);
}

TEST(TpsClassTest, RejectsOutOfRange) {
  EXPECT_THROW(tps_class(-0.1), std::out_of_range);
  EXPECT_THROW(tps_class(1.5), std::out_of_range);
  EXPECT_THROW(tps_class(std::nan("")), std::out_of_range);
}

TEST(ClassHistogramTest, UniformOther) {
  const ClassHistogram h = class_histogram(LabelGrid(2, 2));
  EXPECT_EQ(h[0], 4u);
  for (int c = 1; c < kNumLabels; ++c) EXPECT_EQ(h[static_cast<std::size_t>(c)], 0u);
}

TEST(ClassHistogramTest, OnePixelPerBaseClass) {
  LabelGrid g(4, 1);
  for (int c = 0; c < kNumBaseClasses; ++c) g.set(c, 0, static_cast<ClassId>(c));
  const ClassHistogram h = class_histogram(g);
  for (int c = 0; c < kNumBaseClasses; ++c) EXPECT_EQ(h[static_cast<std::size_t>(c)], 1u);
}

TEST(ClassHistogramTest, MatchesPerPixelTally) {
  LabelGrid g = RandomGrid(128, 64, kNumLabels, 42);
  g.set_resolution(Resolution::kPolygonsAirCells);
  std::map<int, std::uint64_t> tally;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) ++tally[static_cast<int>(g.at(x, y))];
  }
  const ClassHistogram h = class_histogram(g);
  for (int c = 0; c < kNumLabels; ++c) EXPECT_EQ(h[static_cast<std::size_t>(c)], tally[c]);
}

TEST(LabelGridTest, PolygonsGridRejectsAuxiliaryLabels) {
  LabelGrid g(3, 3);
  EXPECT_NO_THROW(g.Validate());
  g.set(1, 1, ClassId::kNoise);
  EXPECT_THROW(g.Validate(), std::invalid_argument);
  g.set_resolution(Resolution::kPolygonsNoise);
  EXPECT_NO_THROW(g.Validate());
}

TEST(LabelGridTest, ParseNames) {
  EXPECT_EQ(ParseClassName("PDL1_POS"), ClassId::kPdl1Pos);
  EXPECT_EQ(ParseResolution("polygons_noise"), Resolution::kPolygonsNoise);
  EXPECT_FALSE(ParseResolution("pixels").has_value());
  EXPECT_FALSE(ClassFromIndex(7).has_value());
  for (int c = 0; c < kNumLabels; ++c) {
    const ClassId id = static_cast<ClassId>(c);
    EXPECT_EQ(ParseClassName(ClassName(id)), id);
  }
}

TEST(LabelGridTest, UpscaleNearest) {
  LabelGrid g(2, 1);
  g.set(1, 0, ClassId::kPdl1Neg);
  const LabelGrid up = UpscaleNearest(g, 3);
  ASSERT_EQ(up.width(), 6);
  ASSERT_EQ(up.height(), 3);
  EXPECT_EQ(up.at(2, 2), ClassId::kOther);
  EXPECT_EQ(up.at(3, 0), ClassId::kPdl1Neg);
}

TEST(PngIoTest, MaskRoundTrip) {
  TempDir dir("png");
  LabelGrid g = RandomGrid(37, 19, kNumLabels, 3);
  g.set_resolution(Resolution::kPolygonsAirCells);
  WriteMaskPng(dir / "m.png", g);
  const LabelGrid back = ReadMaskPng(dir / "m.png");
  EXPECT_EQ(back.labels(), g.labels());
  EXPECT_EQ(back.width(), 37);
}

TEST(PngIoTest, ImageRoundTrip) {
  TempDir dir("png");
  RgbImage img(5, 7);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 5; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(x * 40), static_cast<std::uint8_t>(y * 30), 200});
    }
  }
  WriteRgbPng(dir / "i.png", img);
  EXPECT_EQ(ReadRgbPng(dir / "i.png"), img);
}

TEST(PngIoTest, MissingFileThrows) {
  EXPECT_ANY_THROW(ReadRgbPng("/nonexistent/x.png"));
}

DatasetManifest MakeManifest(int n_low, int n_high) {
  DatasetManifest m;
  for (int i = 0; i < n_low + n_high; ++i) {
    ManifestEntry e;
    e.image = "img_" + std::to_string(i) + ".png";
    e.mask = "mask_" + std::to_string(i) + ".png";
    e.tps = i < n_low ? 0.0 : 0.9;
    m.entries.push_back(e);
  }
  return m;
}

TEST(SplitTest, HalfSplitIsDeterministic) {
  const DatasetManifest m = MakeManifest(10, 0);
  const auto [train, test] = split_dataset(m, 0.5, false, 17);
  EXPECT_EQ(train.entries.size(), 5u);
  EXPECT_EQ(test.entries.size(), 5u);
  const auto [train2, test2] = split_dataset(m, 0.5, false, 17);
  EXPECT_EQ(train.entries, train2.entries);
  EXPECT_EQ(test.entries, test2.entries);
}

TEST(SplitTest, StratifiedPerStratumRounding) {
  const DatasetManifest m = MakeManifest(8, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [train, test] = split_dataset(m, 0.5, true, seed);
    int low = 0;
    int high = 0;
    for (const ManifestEntry& e : train.entries) (e.tps < 0.01 ? low : high)++;
    EXPECT_EQ(low, 4);
    EXPECT_EQ(high, 1);
    EXPECT_EQ(test.entries.size(), 5u);
  }
}

TEST(SplitTest, RejectsDegenerateFractions) {
  const DatasetManifest m = MakeManifest(10, 0);
  EXPECT_THROW(split_dataset(m, 1.0, false, 0), std::invalid_argument);
  EXPECT_THROW(split_dataset(m, 0.0, false, 0), std::invalid_argument);
  EXPECT_THROW(split_dataset(DatasetManifest{}, 0.5, false, 0), std::invalid_argument);
}

TEST(SplitTest, BothHalvesNonEmpty) {
  const DatasetManifest m = MakeManifest(3, 0);
  const auto [train, test] = split_dataset(m, 0.05, false, 1);
  EXPECT_FALSE(train.entries.empty());
  EXPECT_FALSE(test.entries.empty());
}

TEST(ManifestTest, SaveLoadRoundTrip) {
  TempDir dir("manifest");
  DatasetManifest m = MakeManifest(2, 1);
  m.seed = 9;
  m.entries[1].split = Split::kTest;
  SaveManifest(dir / "manifest.jsonl", m);
  const DatasetManifest back = LoadManifest(dir / "manifest.jsonl", false);
  ASSERT_EQ(back.entries.size(), 3u);
  EXPECT_EQ(back.entries[1].split, Split::kTest);
  EXPECT_DOUBLE_EQ(back.entries[2].tps, 0.9);
  EXPECT_EQ(back.WithSplit(Split::kTest).size(), 1u);
}

TEST(ManifestTest, MissingFilesRejected) {
  TempDir dir("manifest");
  SaveManifest(dir / "manifest.jsonl", MakeManifest(1, 0));
  EXPECT_ANY_THROW(LoadManifest(dir / "manifest.jsonl", true));
}

}  // namespace
}  // namespace histosynth::core
