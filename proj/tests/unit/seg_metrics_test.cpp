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

#include "histosynth/seg/metrics.h"
#include "test_util.h"

namespace histosynth::seg {
namespace {

using core::ClassId;
using core::LabelGrid;

LabelGrid FromRows(const nlohmann::json& rows) {
  LabelGrid g(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      g.set(x, y, static_cast<ClassId>(rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)].get<int>()));
    }
  }
  return g;
}

ProbabilityMap OneHotProbs(const LabelGrid& g, int n_classes, double p_true) {
  ProbabilityMap m(n_classes, g.height(), g.width());
  const double rest = (1.0 - p_true) / (n_classes - 1);
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      for (int c = 0; c < n_classes; ++c) m.at(c, y, x) = static_cast<int>(g.at(x, y)) == c ? p_true : rest;
    }
  }
  return m;
}

TEST(ConfusionTest, PerfectPredictionHasNoErrors) {
  const LabelGrid g = testing::RandomGrid(16, 16, 4, 1);
  const ConfusionTensor ct = confusion(g, g, 4);
  for (const ClassCounts& c : ct.counts[0]) {
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
  }
}

TEST(ConfusionTest, TwoByTwoHandTally) {
  LabelGrid gt(2, 2, ClassId::kOther);
  gt.set(1, 1, ClassId::kPdl1Pos);
  gt.set(0, 1, ClassId::kPdl1Pos);
  LabelGrid pred = gt;
  pred.set(0, 1, ClassId::kOther);
  const auto t = confusion(pred, gt, 2).counts[0];
  EXPECT_EQ(t[0].tp, 2u);
  EXPECT_EQ(t[0].fp, 1u);
  EXPECT_EQ(t[0].fn, 0u);
  EXPECT_EQ(t[0].tn, 1u);
  EXPECT_EQ(t[1].tp, 1u);
  EXPECT_EQ(t[1].fp, 0u);
  EXPECT_EQ(t[1].fn, 1u);
  EXPECT_EQ(t[1].tn, 2u);
}

TEST(ConfusionTest, MatchesDoubleLoop) {
  const LabelGrid gt = testing::RandomGrid(32, 32, 4, 2);
  const LabelGrid pred = testing::RandomGrid(32, 32, 4, 3);
  const auto t = confusion(pred, gt, 4).counts[0];
  for (int c = 0; c < 4; ++c) {
    ClassCounts ref;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const bool p = static_cast<int>(pred.at(x, y)) == c;
        const bool g = static_cast<int>(gt.at(x, y)) == c;
        ref.tp += p && g;
        ref.fp += p && !g;
        ref.fn += !p && g;
        ref.tn += !p && !g;
      }
    }
    EXPECT_EQ(t[static_cast<std::size_t>(c)].tp, ref.tp);
    EXPECT_EQ(t[static_cast<std::size_t>(c)].fp, ref.fp);
    EXPECT_EQ(t[static_cast<std::size_t>(c)].fn, ref.fn);
    EXPECT_EQ(t[static_cast<std::size_t>(c)].tn, ref.tn);
  }
}

TEST(ConfusionTest, RejectsMismatch) {
  EXPECT_THROW(confusion(LabelGrid(2, 2), LabelGrid(3, 2), 4), std::invalid_argument);
  LabelGrid bad(2, 2, ClassId::kInflammation);
  EXPECT_THROW(confusion(bad, LabelGrid(2, 2), 3), std::out_of_range);
}

TEST(MetricsTest, PerfectPredictionIsOne) {
  const std::vector<LabelGrid> gt = {testing::RandomGrid(8, 8, 4, 1), LabelGrid(8, 8, ClassId::kPdl1Neg)};
  const ConfusionTensor ct = confusion(gt, gt, 4);
  EXPECT_EQ(miou(ct), 1.0);
  EXPECT_EQ(wiou(ct), 1.0);
  EXPECT_EQ(wprecision(ct), 1.0);
  EXPECT_EQ(wrecall(ct), 1.0);
}

TEST(MetricsTest, AllClassZeroOnHalfSplit) {
  LabelGrid gt(4, 2, ClassId::kOther);
  for (int x = 0; x < 4; ++x) gt.set(x, 1, ClassId::kPdl1Pos);
  const ConfusionTensor ct = confusion(LabelGrid(4, 2), gt, 2);
  EXPECT_DOUBLE_EQ(miou(ct), 0.25);
}

TEST(MetricsTest, MatchesReferenceValues) {
  const nlohmann::json fx = testing::LoadFixture("metric_oracle.json");
  const int n = fx["n_classes"];
  std::vector<LabelGrid> gt;
  std::vector<LabelGrid> pred;
  std::vector<ProbabilityMap> probs;
  for (const auto& c : fx["cases"]) {
    gt.push_back(FromRows(c["gt"]));
    pred.push_back(FromRows(c["pred"]));
    ProbabilityMap p(n, gt.back().height(), gt.back().width());
    for (int k = 0; k < n; ++k) {
      for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
          p.at(k, y, x) = c["probs"][static_cast<std::size_t>(k)][static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
        }
      }
    }
    probs.push_back(std::move(p));
  }
  const auto& e = fx["expected"];
  const ConfusionTensor ct = confusion(pred, gt, n);
  EXPECT_NEAR(miou(ct), e["miou"].get<double>(), 1e-12);
  EXPECT_NEAR(wiou(ct), e["wiou"].get<double>(), 1e-12);
  EXPECT_NEAR(wprecision(ct), e["wprecision"].get<double>(), 1e-12);
  EXPECT_NEAR(wrecall(ct), e["wrecall"].get<double>(), 1e-12);
  const TObjectiveResult t = tobjective(ct, probs, gt);
  EXPECT_NEAR(t.mean_dice, e["mean_dice"].get<double>(), 1e-12);
  EXPECT_NEAR(t.cross_entropy, e["cross_entropy"].get<double>(), 1e-12);
  EXPECT_NEAR(t.value, e["tobjective"].get<double>(), 1e-12);
}

TEST(TObjectiveTest, PerfectUnitConfidenceIsOne) {
  const std::vector<LabelGrid> gt = {testing::RandomGrid(8, 8, 4, 5)};
  const std::vector<ProbabilityMap> probs = {OneHotProbs(gt[0], 4, 1.0)};
  const TObjectiveResult r = tobjective(confusion(gt, gt, 4), probs, gt);
  EXPECT_EQ(r.mean_dice, 1.0);
  EXPECT_EQ(r.cross_entropy, 0.0);
  EXPECT_EQ(r.value, 1.0);
}

TEST(TObjectiveTest, HalfConfidenceOnTrueClass) {
  const std::vector<LabelGrid> gt = {testing::RandomGrid(8, 8, 4, 5)};
  const std::vector<ProbabilityMap> probs = {OneHotProbs(gt[0], 4, 0.5)};
  const ConfusionTensor ct = confusion(gt, gt, 4);
  EXPECT_NEAR(tobjective(ct, probs, gt).value, 1.0 / (1.0 + std::log(2.0) / 4.0), 1e-14);
  TObjectiveOptions per_class;
  per_class.ce_weight_one_over_classes = true;
  const std::vector<LabelGrid> gt3 = {testing::RandomGrid(8, 8, 3, 6)};
  const std::vector<ProbabilityMap> p3 = {OneHotProbs(gt3[0], 3, 0.5)};
  EXPECT_NEAR(tobjective(confusion(gt3, gt3, 3), p3, gt3, per_class).value, 1.0 / (1.0 + std::log(2.0) / 3.0), 1e-14);
}

TEST(TObjectiveTest, AllWrongIsDrivenByCrossEntropy) {
  LabelGrid gt(4, 4, ClassId::kOther);
  for (int x = 0; x < 4; ++x) gt.set(x, 0, ClassId::kPdl1Pos);
  LabelGrid pred(4, 4, ClassId::kPdl1Pos);
  for (int x = 0; x < 4; ++x) pred.set(x, 0, ClassId::kOther);
  const std::vector<LabelGrid> gts = {gt};
  const std::vector<LabelGrid> preds = {pred};
  const std::vector<ProbabilityMap> probs = {OneHotProbs(pred, 2, 0.8)};
  const TObjectiveResult r = tobjective(confusion(preds, gts, 2), probs, gts);
  EXPECT_EQ(r.mean_dice, 0.0);
  EXPECT_NEAR(r.cross_entropy, -std::log(0.2), 1e-14);
  EXPECT_NEAR(r.value, 1.0 / (0.25 * -std::log(0.2)), 1e-12);
}

TEST(TObjectiveTest, ZeroDenominatorIsInfiniteWithDiagnostic) {
  LabelGrid gt(2, 1, ClassId::kOther);
  LabelGrid pred(2, 1, ClassId::kPdl1Pos);
  const std::vector<LabelGrid> gts = {gt};
  const std::vector<LabelGrid> preds = {pred};
  const std::vector<ProbabilityMap> probs = {OneHotProbs(gt, 2, 1.0)};
  const TObjectiveResult r = tobjective(confusion(preds, gts, 2), probs, gts);
  EXPECT_TRUE(std::isinf(r.value));
  EXPECT_FALSE(r.diagnostic.empty());
}

}  // namespace
}  // namespace histosynth::seg
