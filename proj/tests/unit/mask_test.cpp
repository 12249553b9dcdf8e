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

#include <cmath>
#include <vector>

#include "histosynth/core/tps.h"
#include "histosynth/mask/air_cells.h"
#include "histosynth/mask/noise.h"
#include "histosynth/mask/one_hot.h"
#include "histosynth/mask/polygon.h"
#include "histosynth/mask/synthesize.h"
#include "test_util.h"

namespace histosynth::mask {
namespace {

using core::ClassId;
using core::LabelGrid;
using core::Resolution;

PolygonAnnotation Rect(ClassId id, double x0, double y0, double x1, double y1) {
  return {id, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

bool PointInPolygon(const std::vector<Point>& ring, double px, double py) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > py) != (b.y > py) && px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

TEST(RasterizeTest, EmptyListGivesBackground) {
  const LabelGrid g = rasterize_polygons({}, 16, 8, ClassId::kInflammation);
  for (ClassId id : g.labels()) EXPECT_EQ(id, ClassId::kInflammation);
  EXPECT_EQ(g.resolution(), Resolution::kPolygons);
}

TEST(RasterizeTest, AxisAlignedRectangle) {
  const std::vector<PolygonAnnotation> polys = {Rect(ClassId::kPdl1Pos, 10, 10, 20, 20)};
  const LabelGrid g = rasterize_polygons(polys, 32, 32);
  EXPECT_EQ(core::class_histogram(g)[1], 100u);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool inside = x >= 10 && x < 20 && y >= 10 && y < 20;
      EXPECT_EQ(g.at(x, y) == ClassId::kPdl1Pos, inside) << x << "," << y;
    }
  }
}

TEST(RasterizeTest, LastWriterWins) {
  const std::vector<PolygonAnnotation> polys = {Rect(ClassId::kPdl1Neg, 0, 0, 10, 10),
                                                Rect(ClassId::kInflammation, 5, 5, 15, 15)};
  const LabelGrid g = rasterize_polygons(polys, 16, 16);
  EXPECT_EQ(g.at(7, 7), ClassId::kInflammation);
  EXPECT_EQ(g.at(2, 2), ClassId::kPdl1Neg);
  EXPECT_EQ(g.at(12, 12), ClassId::kInflammation);
  EXPECT_EQ(g.at(15, 0), ClassId::kOther);
}

TEST(RasterizeTest, MatchesPointInPolygonOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(0.0, 40.0);
  int checked = 0;
  while (checked < 20) {
    PolygonAnnotation p;
    p.class_id = ClassId::kPdl1Pos;
    const double cx = coord(rng);
    const double cy = coord(rng);
    for (int k = 0; k < 7; ++k) {
      const double angle = 2.0 * M_PI * k / 7.0;
      const double r = 3.0 + coord(rng) / 4.0;
      p.vertices.push_back({cx + r * std::cos(angle), cy + r * std::sin(angle)});
    }
    if (IsSelfIntersecting(p.vertices)) continue;
    const LabelGrid g = rasterize_polygons(std::vector<PolygonAnnotation>{p}, 40, 40);
    for (int y = 0; y < 40; ++y) {
      for (int x = 0; x < 40; ++x) {
        EXPECT_EQ(g.at(x, y) == ClassId::kPdl1Pos, PointInPolygon(p.vertices, x + 0.5, y + 0.5));
      }
    }
    ++checked;
  }
}

TEST(RasterizeTest, DegeneratePolygonsAreRejected) {
  std::vector<PolygonAnnotation> polys = {Rect(ClassId::kPdl1Pos, 0, 0, 4, 4),
                                          {ClassId::kPdl1Neg, {{0, 0}, {1, 1}, {2, 2}}}};
  try {
    rasterize_polygons(polys, 8, 8);
    FAIL() << "collinear ring accepted";
  } catch (const DegeneratePolygonError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  polys[1] = {ClassId::kPdl1Neg, {{0, 0}, {4, 4}, {4, 0}, {0, 4}}};
  EXPECT_THROW(rasterize_polygons(polys, 8, 8), DegeneratePolygonError);
  polys[1] = {ClassId::kPdl1Neg, {{0, 0}, {4, 4}}};
  EXPECT_THROW(rasterize_polygons(polys, 8, 8), DegeneratePolygonError);
  polys[1] = Rect(ClassId::kNoise, 0, 0, 2, 2);
  EXPECT_THROW(rasterize_polygons(polys, 8, 8), DegeneratePolygonError);
}

TEST(RasterizeTest, ParsesJson) {
  const auto polys = ParsePolygonsJson(
      R"([{"class": "PDL1_NEG", "points": [[0, 0], [4, 0], [4, 2], [0, 2]]}])");
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].class_id, ClassId::kPdl1Neg);
  EXPECT_EQ(core::class_histogram(rasterize_polygons(polys, 8, 8))[2], 8u);
  EXPECT_THROW(ParsePolygonsJson(R"([{"class": "BONE", "points": []}])"), std::invalid_argument);
  EXPECT_THROW(ParsePolygonsJson(R"({"class": "OTHER"})"), std::invalid_argument);
}

TEST(NoiseTest, CapRuleLeavesLabelsUnchanged) {
  const LabelGrid g = testing::RandomGrid(64, 32, 4, 1);
  const LabelGrid out = inject_noise(g, {1000.0, 5});
  EXPECT_EQ(out.labels(), g.labels());
  EXPECT_EQ(out.resolution(), Resolution::kPolygonsNoise);
  EXPECT_EQ(NoiseProbability({INFINITY, 0}, 64, 32), 0.0);
}

TEST(NoiseTest, LargeGridCountWithinFourSigma) {
  const LabelGrid g(1024, 512);
  const LabelGrid out = inject_noise(g, {15.0, 123});
  const double n = 512.0 * 1024.0;
  const double p = 1.0 / 225.0;
  const double count = static_cast<double>(core::class_histogram(out)[4]);
  EXPECT_NEAR(n * p, 2330.1, 0.1);
  EXPECT_LE(std::abs(count - n * p), 4.0 * std::sqrt(n * p * (1.0 - p)));
}

TEST(NoiseTest, SameSeedSamePattern) {
  const LabelGrid g = testing::RandomGrid(64, 64, 4, 2);
  EXPECT_EQ(inject_noise(g, {15.0, 7}), inject_noise(g, {15.0, 7}));
  EXPECT_NE(inject_noise(g, {15.0, 7}), inject_noise(g, {15.0, 8}));
}

TEST(NoiseTest, RejectsInvalidInput) {
  EXPECT_THROW(NoiseProbability({0.5, 0}, 8, 8), std::invalid_argument);
  EXPECT_THROW(NoiseProbability({std::nan(""), 0}, 8, 8), std::invalid_argument);
  const LabelGrid noisy = inject_noise(LabelGrid(8, 8), {2.0, 0});
  EXPECT_THROW(inject_noise(noisy, {2.0, 0}), std::invalid_argument);
}

core::RgbImage Gray(int w, int h, std::uint8_t level) { return core::RgbImage(w, h, {level, level, level}); }

TEST(AirCellsTest, WhiteIsAir) {
  ThresholdSpec t;
  t.air_threshold = 240;
  t.cell_threshold = 60;
  const LabelGrid out = extract_air_cells(Gray(6, 4, 255), LabelGrid(6, 4), t);
  for (ClassId id : out.labels()) EXPECT_EQ(id, ClassId::kAir);
  EXPECT_EQ(out.resolution(), Resolution::kPolygonsAirCells);
}

TEST(AirCellsTest, MidGrayKeepsBase) {
  ThresholdSpec t;
  t.air_threshold = 240;
  t.cell_threshold = 60;
  const LabelGrid base = testing::RandomGrid(6, 4, 4, 3);
  EXPECT_EQ(extract_air_cells(Gray(6, 4, 128), base, t).labels(), base.labels());
}

TEST(AirCellsTest, CheckerboardMatchesPerPixelOracle) {
  ThresholdSpec t;
  t.air_threshold = 200;
  t.cell_threshold = 60;
  core::RgbImage img(9, 7);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      const std::uint8_t v = (x + y) % 2 ? 235 : 20;
      img.set(x, y, {v, v, v});
    }
  }
  const LabelGrid out = extract_air_cells(img, LabelGrid(9, 7), t);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) EXPECT_EQ(out.at(x, y), (x + y) % 2 ? ClassId::kAir : ClassId::kCell);
  }
}

TEST(AirCellsTest, RejectsBadInput) {
  ThresholdSpec t;
  t.air_threshold = 50;
  t.cell_threshold = 60;
  EXPECT_THROW(extract_air_cells(Gray(4, 4, 0), LabelGrid(4, 4), t), std::invalid_argument);
  EXPECT_THROW(extract_air_cells(Gray(4, 4, 0), LabelGrid(5, 4), ThresholdSpec{}), std::invalid_argument);
}

TEST(AirCellsTest, MultiOtsuMatchesReference) {
  for (const auto& c : testing::LoadFixture("multi_otsu_oracle.json")) {
    std::array<std::uint64_t, 256> h{};
    for (int i = 0; i < 256; ++i) h[static_cast<std::size_t>(i)] = c["histogram"][static_cast<std::size_t>(i)];
    const auto t = MultiOtsuThresholds(h);
    EXPECT_EQ(t[0], c["thresholds"][0].get<int>());
    EXPECT_EQ(t[1], c["thresholds"][1].get<int>());
  }
}

TEST(SynthesizeTest, FullPositiveHasNoNegative) {
  const LabelGrid g = synthesize_mask(1.0, MaskLayout{}, 128, 64, 3);
  EXPECT_EQ(core::class_histogram(g)[2], 0u);
  EXPECT_GT(core::class_histogram(g)[1], 0u);
}

TEST(SynthesizeTest, ZeroTargetMakesAllTumorNegative) {
  const LabelGrid g = synthesize_mask(0.0, MaskLayout{}, 128, 64, 3);
  EXPECT_EQ(core::class_histogram(g)[1], 0u);
  EXPECT_GT(core::class_histogram(g)[2], 0u);
}

TEST(SynthesizeTest, IntermediateTargetWithinTolerance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LabelGrid g = synthesize_mask(0.30, MaskLayout{}, 128, 64, seed);
    const double tps = core::compute_tps(g);
    EXPECT_GE(tps, 0.28);
    EXPECT_LE(tps, 0.32);
    EXPECT_EQ(g.resolution(), Resolution::kPolygons);
  }
}

TEST(SynthesizeTest, Deterministic) {
  EXPECT_EQ(synthesize_mask(0.4, MaskLayout{}, 64, 64, 9), synthesize_mask(0.4, MaskLayout{}, 64, 64, 9));
}

TEST(SynthesizeTest, RejectsOutOfRangeTarget) {
  EXPECT_THROW(synthesize_mask(1.2, MaskLayout{}, 64, 64, 0), std::invalid_argument);
}

TEST(OneHotTest, UniformOther) {
  const auto t = one_hot_encode(LabelGrid(5, 3));
  ASSERT_EQ(t.channels, core::kNumLabels);
  for (int c = 0; c < t.channels; ++c) {
    for (int i = 0; i < 15; ++i) EXPECT_EQ(t.channel(c)[i], c == 0 ? 1.0f : 0.0f);
  }
}

TEST(OneHotTest, RoundTripAndChannelSum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LabelGrid g = testing::RandomGrid(17, 11, core::kNumLabels, seed);
    g.set_resolution(Resolution::kPolygonsAirCells);
    const auto t = one_hot_encode(g);
    for (std::size_t p = 0; p < t.plane(); ++p) {
      float sum = 0.0f;
      for (int c = 0; c < t.channels; ++c) sum += t.channel(c)[p];
      EXPECT_EQ(sum, 1.0f);
    }
    EXPECT_EQ(one_hot_decode(t, Resolution::kPolygonsAirCells), g);
  }
}

TEST(OneHotTest, RejectsTooFewChannels) {
  LabelGrid g(2, 2, ClassId::kCell, Resolution::kPolygonsAirCells);
  EXPECT_THROW(one_hot_encode(g, 4), std::invalid_argument);
}

}  // namespace
}  // namespace histosynth::mask
