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
#include <random>

#include "histosynth/corpus/pseudo_histology.h"
#include "histosynth/mask/noise.h"
#include "histosynth/seg/train.h"
#include "histosynth/seg/unetpp.h"
#include "test_util.h"

namespace histosynth::seg {
namespace {

using nn::Tensor;

std::vector<core::PairedSample> Corpus(int count, std::uint64_t seed, int width = 128, int height = 64) {
  corpus::CorpusOptions opts;
  opts.count = count;
  opts.width = width;
  opts.height = height;
  opts.seed = seed;
  return corpus::GenerateCorpus(opts);
}

Tensor<double> RandomTensor(int c, int h, int w, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Tensor<double> t(c, h, w);
  for (double& v : t.data) v = normal(rng);
  return t;
}

TEST(SoftmaxTest, ColumnsSumToOne) {
  const Tensor<double> p = Softmax(RandomTensor(4, 3, 5, 1, 5.0));
  for (std::size_t i = 0; i < p.plane(); ++i) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += p.channel(c)[i];
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(SegLossTest, GradientMatchesCentralDifferences) {
  Tensor<double> logits = RandomTensor(4, 6, 5, 2, 2.0);
  const core::LabelGrid gt = testing::RandomGrid(5, 6, 4, 3);
  const SegLoss<double> base = SegmentationLoss(logits, gt, 0.25);
  EXPECT_NEAR(base.loss, base.dice_loss + 0.25 * base.cross_entropy, 1e-14);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double keep = logits.data[i];
    logits.data[i] = keep + 1e-6;
    const double up = SegmentationLoss(logits, gt, 0.25).loss;
    logits.data[i] = keep - 1e-6;
    const double down = SegmentationLoss(logits, gt, 0.25).loss;
    logits.data[i] = keep;
    EXPECT_NEAR(base.grad_logits.data[i], (up - down) / 2e-6, 1e-8);
  }
}

TEST(SegLossTest, PerfectConfidentLogitsGiveNearZeroLoss) {
  const core::LabelGrid gt = testing::RandomGrid(8, 8, 4, 4);
  Tensor<double> logits(4, 8, 8, -30.0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) logits.at(static_cast<int>(gt.at(x, y)), y, x) = 30.0;
  }
  EXPECT_LT(SegmentationLoss(logits, gt).loss, 1e-9);
}

TEST(UNetPlusPlusTest, OutputShapeAndInputChecks) {
  const SegmenterConfig cfg{3, 4, 3, 4};
  UNetPlusPlus<float> net(cfg);
  const Tensor<float> y = net.Infer(Tensor<float>(3, 16, 24, 0.1f));
  EXPECT_EQ(y.ShapeString(), "4x16x24");
  EXPECT_THROW(net.Infer(Tensor<float>(3, 12, 24)), std::invalid_argument);
  EXPECT_THROW(net.Infer(Tensor<float>(2, 16, 24)), std::invalid_argument);
  EXPECT_THROW((SegmenterConfig{3, 4, 0, 4}.Validate()), std::invalid_argument);
}

TEST(UNetPlusPlusTest, GradientMatchesCentralDifferences) {
  UNetPlusPlus<double> net(SegmenterConfig{3, 3, 2, 2});
  auto params = net.Parameters();
  std::mt19937_64 rng(5);
  InitHe(params, rng);
  Tensor<double> x = RandomTensor(3, 8, 8, 6);
  const Tensor<double> w = RandomTensor(3, 8, 8, 7);
  const auto loss = [&] {
    const Tensor<double> y = net.Infer(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * w.data[i];
    return s;
  };
  nn::ZeroGrad(params);
  net.Forward(x);
  const Tensor<double> gx = net.Backward(w);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); i += 7) {
    const double keep = x.data[i];
    x.data[i] = keep + h;
    const double up = loss();
    x.data[i] = keep - h;
    const double down = loss();
    x.data[i] = keep;
    EXPECT_NEAR(gx.data[i], (up - down) / (2 * h), 1e-5 * std::max(1.0, std::abs(gx.data[i])));
  }
  for (nn::Parameter<double>* p : params) {
    const std::size_t i = p->value.size() / 3;
    const double keep = p->value[i];
    p->value[i] = keep + h;
    const double up = loss();
    p->value[i] = keep - h;
    const double down = loss();
    p->value[i] = keep;
    EXPECT_NEAR(p->grad[i], (up - down) / (2 * h), 1e-5 * std::max(1.0, std::abs(p->grad[i]))) << p->name;
  }
}

TEST(TrainSegmenterTest, OverfitsTwoImages) {
  const auto pairs = Corpus(2, 11, 32, 32);
  SegTrainConfig cfg;
  cfg.steps = 300;
  cfg.augment_flips = false;
  cfg.seed = 1;
  const SegTrainResult r = train_segmenter(pairs, cfg);
  EXPECT_GE(evaluate_segmenter(*r.model, pairs).miou, 0.95);
}

TEST(TrainSegmenterTest, DeterministicLossLog) {
  const auto pairs = Corpus(3, 12, 32, 32);
  SegTrainConfig cfg;
  cfg.steps = 15;
  cfg.seed = 4;
  const auto a = train_segmenter(pairs, cfg);
  const auto b = train_segmenter(pairs, cfg);
  EXPECT_EQ(a.log, b.log);
  cfg.seed = 5;
  EXPECT_NE(train_segmenter(pairs, cfg).log, a.log);
}

TEST(TrainSegmenterTest, RejectsAuxiliaryLabels) {
  auto pairs = Corpus(1, 13, 32, 32);
  pairs[0].mask = mask::inject_noise(pairs[0].mask, {2.0, 1});
  SegTrainConfig cfg;
  cfg.steps = 1;
  EXPECT_THROW(train_segmenter(pairs, cfg), std::invalid_argument);
}

TEST(TrainSegmenterTest, BundledCorpusReachesSevenTenthsMiou) {
  const auto train = Corpus(200, 1);
  const auto test = Corpus(50, 2);
  SegTrainConfig cfg;
  cfg.steps = 600;
  cfg.seed = 3;
  const auto r = train_segmenter(train, cfg);
  const SegReport report = evaluate_segmenter(*r.model, test);
  EXPECT_GE(report.miou, 0.7);
  const nlohmann::json j = SegReportToJson(report);
  EXPECT_EQ(j["per_class"].size(), 4u);
}

TEST(SegmenterCheckpointTest, RoundTrip) {
  UNetPlusPlus<float> net(SegmenterConfig{3, 4, 2, 4});
  std::mt19937_64 rng(2);
  InitHe(net.Parameters(), rng);
  testing::TempDir dir("seg");
  SaveSegmenter(net, dir / "a.ckpt");
  const auto back = LoadSegmenter(dir / "a.ckpt");
  EXPECT_EQ(back->config(), net.config());
  SaveSegmenter(*back, dir / "b.ckpt");
  EXPECT_EQ(testing::ReadFile(dir / "a.ckpt"), testing::ReadFile(dir / "b.ckpt"));
  const auto img = Corpus(1, 3, 32, 32)[0].image;
  EXPECT_EQ(Predict(net, img).labels, Predict(*back, img).labels);
}

TEST(AugmentationTest, ArmsShareConfigAndRejectLeakage) {
  const auto tagged = [](std::vector<core::PairedSample> pairs, const std::string& tag) {
    for (auto& p : pairs) p.id = tag + "_" + p.id;
    return pairs;
  };
  const auto real = tagged(Corpus(2, 21, 32, 32), "real");
  const auto synth = tagged(Corpus(2, 22, 32, 32), "synth");
  const auto control = tagged(Corpus(2, 23, 32, 32), "control");
  const auto test = tagged(Corpus(2, 24, 32, 32), "test");
  SegTrainConfig cfg;
  cfg.steps = 2;
  cfg.model.base_channels = 4;
  const AugmentationReport r = augmentation_experiment(real, synth, control, test, cfg);
  ASSERT_EQ(r.arms.size(), 3u);
  EXPECT_EQ(r.arms[0].name, "baseline");
  EXPECT_EQ(r.arms[1].name, "real+synthetic");
  EXPECT_EQ(r.arms[2].name, "real+control");
  EXPECT_EQ(r.arms[0].n_train, 2u);
  EXPECT_EQ(r.arms[1].n_train, 4u);
  EXPECT_EQ(r.arms[0].config, r.arms[1].config);
  EXPECT_EQ(r.arms[0].config, r.arms[2].config);
  EXPECT_TRUE(r.deltas.contains("real+synthetic"));

  auto leaked = synth;
  leaked[0].id = "renamed";
  leaked[0].image = test[1].image;
  leaked[0].mask = test[1].mask;
  EXPECT_THROW(augmentation_experiment(real, leaked, control, test, cfg), std::invalid_argument);
  EXPECT_THROW(augmentation_experiment(real, synth, test, test, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace histosynth::seg
