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
#include <algorithm>
#include <random>

#include "histosynth/corpus/pseudo_histology.h"
#include "histosynth/gan/losses.h"
#include "histosynth/gan/model.h"
#include "histosynth/gan/trainer.h"
#include "histosynth/mask/noise.h"
#include "histosynth/mask/one_hot.h"
#include "test_util.h"

namespace histosynth::gan {
namespace {

using nn::Tensor;

Tensor<double> FromJson(const nlohmann::json& values, int c, int h, int w) {
  Tensor<double> t(c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = values[i].get<double>();
  return t;
}

TEST(GeneratorOracleTest, ForwardAndBackwardMatchReference) {
  const nlohmann::json fx = testing::LoadFixture("generator_oracle.json");
  GeneratorConfig cfg = fx["config"].get<GeneratorConfig>();
  Generator<double> g(cfg);
  const auto params = g.Parameters();
  const auto& layers = fx["layers"];
  ASSERT_EQ(params.size(), 2 * layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    ASSERT_EQ(params[2 * l]->value.size(), layers[l]["weight"].size()) << params[2 * l]->name;
    ASSERT_EQ(params[2 * l + 1]->value.size(), layers[l]["bias"].size());
    for (std::size_t i = 0; i < params[2 * l]->value.size(); ++i) params[2 * l]->value[i] = layers[l]["weight"][i];
    for (std::size_t i = 0; i < params[2 * l + 1]->value.size(); ++i) {
      params[2 * l + 1]->value[i] = layers[l]["bias"][i];
    }
  }
  const int h = fx["height"];
  const int w = fx["width"];
  const Tensor<double> x = FromJson(fx["input"], cfg.input_labels, h, w);
  const Tensor<double> expected = FromJson(fx["output"], 3, h, w);
  const Tensor<double> y = g.Forward(x);
  ASSERT_TRUE(y.SameShape(expected));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.data[i], expected.data[i], 1e-9);

  Tensor<double> grad(3, h, w);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad.data[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grad.size() - 1);
  }
  nn::ZeroGrad(params);
  const Tensor<double> gx = g.Backward(grad);
  const Tensor<double> expected_gx = FromJson(fx["input_grad"], cfg.input_labels, h, w);
  for (std::size_t i = 0; i < gx.size(); ++i) EXPECT_NEAR(gx.data[i], expected_gx.data[i], 1e-8);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < params[2 * l]->grad.size(); ++i) {
      EXPECT_NEAR(params[2 * l]->grad[i], layers[l]["weight_grad"][i].get<double>(), 1e-8) << params[2 * l]->name;
    }
    for (std::size_t i = 0; i < params[2 * l + 1]->grad.size(); ++i) {
      EXPECT_NEAR(params[2 * l + 1]->grad[i], layers[l]["bias_grad"][i].get<double>(), 1e-8);
    }
  }
}

TEST(GeneratorTest, GradientMatchesCentralDifferences) {
  const GeneratorConfig cfg{core::kNumLabels, 4, 1, 1, 3};
  Generator<double> g(cfg);
  auto params = g.Parameters();
  ASSERT_LE(nn::CountParameters(params), 10000u);
  std::mt19937_64 rng(4);
  nn::InitNormal(params, 0.2, rng);
  for (nn::Parameter<double>* p : params) {
    std::normal_distribution<double> normal(0.0, 0.1);
    for (double& v : p->value) v += normal(rng);
  }
  Tensor<double> x(cfg.input_labels, 16, 16);
  std::uniform_int_distribution<int> label(0, cfg.input_labels - 1);
  for (int p = 0; p < 256; ++p) x.data[static_cast<std::size_t>(label(rng) * 256 + p)] = 1.0;
  Tensor<double> w(3, 16, 16);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : w.data) v = normal(rng);
  const auto loss = [&] {
    const Tensor<double> y = g.Infer(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * w.data[i];
    return s;
  };
  nn::ZeroGrad(params);
  g.Forward(x);
  g.Backward(w);
  std::vector<std::pair<nn::Parameter<double>*, std::size_t>> coords;
  for (nn::Parameter<double>* p : params) coords.emplace_back(p, p->value.size() / 2);
  std::uniform_int_distribution<std::size_t> which(0, params.size() - 1);
  while (coords.size() < 20) {
    nn::Parameter<double>* p = params[which(rng)];
    coords.emplace_back(p, std::uniform_int_distribution<std::size_t>(0, p->value.size() - 1)(rng));
  }
  const double h = 1e-6;
  for (auto [p, i] : coords) {
    const double keep = p->value[i];
    p->value[i] = keep + h;
    const double up = loss();
    p->value[i] = keep - h;
    const double down = loss();
    p->value[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(numeric - p->grad[i]) / std::max(1e-4, std::abs(numeric) + std::abs(p->grad[i]));
    EXPECT_LE(rel, 1e-3) << p->name << "[" << i << "] analytic " << p->grad[i] << " numeric " << numeric;
  }
}

TEST(GeneratorTest, ShapeRangeAndDeterminism) {
  GanModel model(GeneratorConfig{core::kNumLabels, 8, 2, 1, 3}, DiscriminatorConfig{2, 3, 8}, TrainConfig{});
  const core::LabelGrid mask = testing::RandomGrid(128, 64, 4, 1);
  const Tensor<float> labels = mask::one_hot_encode(mask);
  const Tensor<float> a = generate(model, labels);
  EXPECT_EQ(a.ShapeString(), "3x64x128");
  for (float v : a.data) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(generate(model, labels), a);
}

TEST(GeneratorTest, NoiseChannelChangesOutput) {
  GanModel model(GeneratorConfig{core::kNumLabels, 8, 2, 1, 3}, DiscriminatorConfig{2, 3, 8}, TrainConfig{});
  const core::LabelGrid mask = testing::RandomGrid(64, 32, 4, 1);
  const auto a = mask::inject_noise(mask, {4.0, 1});
  const auto b = mask::inject_noise(mask, {4.0, 2});
  EXPECT_NE(generate(model, mask::one_hot_encode(a)), generate(model, mask::one_hot_encode(b)));
}

TEST(GeneratorTest, RejectsBadInput) {
  Generator<float> g(GeneratorConfig{core::kNumLabels, 4, 2, 1, 3});
  EXPECT_THROW(g.Infer(Tensor<float>(core::kNumLabels, 30, 32)), std::invalid_argument);
  EXPECT_THROW(g.Infer(Tensor<float>(4, 32, 32)), std::invalid_argument);
}

TEST(DiscriminatorTest, ShapesMatchReference) {
  const nlohmann::json fx = testing::LoadFixture("discriminator_shapes.json");
  const DiscriminatorConfig cfg{2, 3, 32};
  MultiscaleDiscriminator<float> d(core::kNumLabels + 3, cfg);
  for (const auto& [key, scales] : fx.items()) {
    const int h = std::stoi(key.substr(0, key.find('x')));
    const int w = std::stoi(key.substr(key.find('x') + 1));
    const auto out = d.Infer(Tensor<float>(core::kNumLabels + 3, h, w, 0.5f));
    ASSERT_EQ(out.scores.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& layers = scales[k];
      ASSERT_EQ(out.features[k].size() + 1, layers.size());
      for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        EXPECT_EQ(out.features[k][l].channels, layers[l][0].get<int>());
        EXPECT_EQ(out.features[k][l].height, layers[l][1].get<int>());
        EXPECT_EQ(out.features[k][l].width, layers[l][2].get<int>());
      }
      EXPECT_EQ(out.scores[k].channels, 1);
      EXPECT_EQ(out.scores[k].height, layers.back()[1].get<int>()) << key;
      EXPECT_EQ(out.scores[k].width, layers.back()[2].get<int>()) << key;
      const auto formula = PatchDiscriminatorShapes(cfg, h >> k, w >> k);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        EXPECT_EQ(formula[l].first, layers[l][1].get<int>());
        EXPECT_EQ(formula[l].second, layers[l][2].get<int>());
      }
    }
  }
}

TEST(DiscriminatorTest, IdenticalInputsIdenticalScores) {
  GanModel model(GeneratorConfig{core::kNumLabels, 4, 2, 1, 3}, DiscriminatorConfig{2, 3, 8}, TrainConfig{});
  const auto mask = testing::RandomGrid(128, 64, 4, 3);
  const Tensor<float> labels = mask::one_hot_encode(mask);
  const Tensor<float> image(3, 64, 128, 0.25f);
  const auto a = discriminate(model, labels, image);
  const auto b = discriminate(model, labels, image);
  EXPECT_EQ(a.scores, b.scores);
  ASSERT_EQ(a.scores.size(), 2u);
  EXPECT_EQ(a.scores[0].height, 11);
  EXPECT_EQ(a.scores[0].width, 19);
}

TEST(DiscriminatorTest, SharedWeightsScaleTwoEqualsScaleOneOnDownsampled) {
  MultiscaleDiscriminator<double> d(5, DiscriminatorConfig{2, 2, 4});
  auto p0 = d.scale(0).Parameters();
  auto p1 = d.scale(1).Parameters();
  std::mt19937_64 rng(2);
  nn::InitNormal(p0, 0.2, rng);
  ASSERT_EQ(p0.size(), p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) p1[i]->value = p0[i]->value;
  Tensor<double> x(5, 32, 48);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : x.data) v = normal(rng);
  const auto out = d.Infer(x);
  const Tensor<double> direct = d.scale(0).Infer(MultiscaleDiscriminator<double>::Downsample(x, 1), nullptr);
  EXPECT_EQ(out.scores[1], direct);
}

TEST(LossTest, BceOfHalfIsLn2) {
  const double l = gan_loss({{0.5, 0.5, 0.5}, {0.5}}, Target::kReal, ScoreLoss::kBce);
  EXPECT_NEAR(l, std::log(2.0), 1e-15);
}

TEST(LossTest, LsganAtTargetIsZero) {
  EXPECT_EQ(gan_loss({{1.0, 1.0}, {1.0}}, Target::kReal, ScoreLoss::kLsgan), 0.0);
  EXPECT_EQ(gan_loss({{0.0}}, Target::kFake, ScoreLoss::kLsgan), 0.0);
}

TEST(LossTest, MatchesReferenceValues) {
  const nlohmann::json fx = testing::LoadFixture("loss_oracle.json");
  const auto scores = fx["scores"].get<std::vector<std::vector<double>>>();
  std::vector<std::vector<double>> probs = scores;
  for (auto& s : probs) {
    for (double& v : s) v = 1.0 / (1.0 + std::exp(-v));
  }
  std::vector<Tensor<double>> logits;
  for (const auto& s : scores) {
    Tensor<double> t(1, 1, static_cast<int>(s.size()));
    t.data = s;
    logits.push_back(t);
  }
  for (const auto& [name, target] : {std::pair{"real", Target::kReal}, std::pair{"fake", Target::kFake}}) {
    const auto& ref = fx[name];
    EXPECT_NEAR(gan_loss(scores, target, ScoreLoss::kLsgan), ref["lsgan"].get<double>(), 1e-12);
    EXPECT_NEAR(gan_loss(probs, target, ScoreLoss::kBce), ref["bce"].get<double>(), 1e-12);
    EXPECT_NEAR(AdversarialLoss<double>(logits, target, Criterion::kBinaryCrossEntropy, nullptr),
                ref["bce"].get<double>(), 1e-12);
    EXPECT_NEAR(AdversarialLoss<double>(logits, target, Criterion::kMseOfScore, nullptr),
                ref["lsgan"].get<double>(), 1e-12);
    EXPECT_NEAR(AdversarialLoss<double>(logits, target, Criterion::kMseOfProbability, nullptr),
                ref["sigmoid_mse"].get<double>(), 1e-12);
  }
}

TEST(LossTest, AdversarialGradientMatchesFiniteDifference) {
  std::vector<Tensor<double>> logits = {Tensor<double>(1, 2, 3), Tensor<double>(1, 1, 2)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (auto& t : logits) {
    for (double& v : t.data) v = normal(rng);
  }
  for (Criterion c : {Criterion::kMseOfProbability, Criterion::kMseOfScore, Criterion::kBinaryCrossEntropy}) {
    std::vector<Tensor<double>> grads;
    AdversarialLoss<double>(logits, Target::kReal, c, &grads);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      for (std::size_t i = 0; i < logits[k].size(); ++i) {
        const double keep = logits[k].data[i];
        logits[k].data[i] = keep + 1e-6;
        const double up = AdversarialLoss<double>(logits, Target::kReal, c, nullptr);
        logits[k].data[i] = keep - 1e-6;
        const double down = AdversarialLoss<double>(logits, Target::kReal, c, nullptr);
        logits[k].data[i] = keep;
        EXPECT_NEAR(grads[k].data[i], (up - down) / 2e-6, 1e-8);
      }
    }
  }
}

std::vector<std::vector<Tensor<double>>> RandomFeatures(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<Tensor<double>>> f(2);
  for (auto& scale : f) {
    for (int l = 0; l < 3; ++l) {
      Tensor<double> t(2 + l, 3, 4 - l);
      for (double& v : t.data) v = normal(rng);
      scale.push_back(t);
    }
  }
  return f;
}

TEST(FeatureMatchingTest, IdenticalFeaturesGiveZero) {
  const auto f = RandomFeatures(1);
  EXPECT_EQ(feature_matching_loss<double>(f, f), 0.0);
}

TEST(FeatureMatchingTest, UnitOffsetGivesLayerCount) {
  const auto real = RandomFeatures(1);
  auto fake = real;
  for (auto& scale : fake) {
    for (auto& t : scale) {
      for (double& v : t.data) v += 1.0;
    }
  }
  EXPECT_NEAR(feature_matching_loss<double>(real, fake), 6.0, 1e-12);
}

TEST(FeatureMatchingTest, MatchesPerElementAccumulation) {
  const auto real = RandomFeatures(1);
  const auto fake = RandomFeatures(2);
  double expected = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    for (std::size_t l = 0; l < real[k].size(); ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < real[k][l].size(); ++i) s += std::abs(fake[k][l].data[i] - real[k][l].data[i]);
      expected += s / static_cast<double>(real[k][l].size());
    }
  }
  EXPECT_NEAR(feature_matching_loss<double>(real, fake), expected, 1e-12);
  auto wrong = fake;
  wrong[1].pop_back();
  EXPECT_THROW(feature_matching_loss<double>(real, wrong), std::invalid_argument);
}

TEST(ObjectiveTest, Arithmetic) {
  EXPECT_EQ(total_generator_objective(1.0, 0.0, 1.0), 1.0);
  EXPECT_EQ(total_generator_objective(0.7, 0.3, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(total_generator_objective(0.25, 2.0, 10.0), 20.25);
}

TEST(ScheduleTest, LearningRateAnchors) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(lr_at_epoch(cfg, 0), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(cfg, 499), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(cfg, 600), 1e-4);
  EXPECT_EQ(lr_at_epoch(cfg, 700), 0.0);
  EXPECT_THROW(lr_at_epoch(cfg, 701), std::out_of_range);
  EXPECT_THROW(lr_at_epoch(cfg, -1), std::out_of_range);
}

TEST(InitTest, ParameterStdNearTwoHundredths) {
  GanModel model(GeneratorConfig::Desk(), DiscriminatorConfig::Desk(), TrainConfig{});
  for (const auto& params : {model.GeneratorParameters(), model.DiscriminatorParameters()}) {
    double sum = 0.0;
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto* p : params) {
      for (float v : p->value) {
        sum += v;
        sq += static_cast<double>(v) * v;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double std = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    EXPECT_GE(std, 0.015);
    EXPECT_LE(std, 0.025);
  }
}

TEST(ConfigTest, ValidationAndJson) {
  EXPECT_THROW((GeneratorConfig{core::kNumLabels, 0, 2, 3, 3}.Validate()), std::invalid_argument);
  EXPECT_THROW((DiscriminatorConfig{0, 3, 32}.Validate()), std::invalid_argument);
  TrainConfig t;
  t.loss_mode = GanLossMode::kLsgan;
  t.seed = 12;
  EXPECT_EQ(nlohmann::json(t).get<TrainConfig>(), t);
  EXPECT_EQ(ParseGanLossMode("bce"), GanLossMode::kBce);
  EXPECT_THROW(ParseGanLossMode("wgan"), std::invalid_argument);
}

std::vector<TrainingPair> TinyPairs() {
  corpus::CorpusOptions opts;
  opts.count = 2;
  opts.width = 32;
  opts.height = 32;
  opts.seed = 4;
  return PrepareTrainingPairs(corpus::GenerateCorpus(opts));
}

GanModel* TinyModel(std::unique_ptr<GanModel>& holder) {
  TrainConfig t;
  t.seed = 8;
  holder = std::make_unique<GanModel>(GeneratorConfig{core::kNumLabels, 4, 1, 1, 3}, DiscriminatorConfig{2, 2, 4}, t);
  return holder.get();
}

TEST(CheckpointTest, SerializeRoundTripIsByteIdentical) {
  std::unique_ptr<GanModel> holder;
  GanModel& model = *TinyModel(holder);
  const auto pairs = TinyPairs();
  TrainStep(model, pairs[0], 2e-4);
  model.global_step = 1;
  model.step_in_epoch = 1;
  const std::string bytes = SerializeCheckpoint(model);
  auto restored = DeserializeCheckpoint(bytes);
  EXPECT_EQ(SerializeCheckpoint(*restored), bytes);
  EXPECT_EQ(restored->global_step, 1);

  testing::TempDir dir("ckpt");
  SaveCheckpoint(model, dir / "a.ckpt");
  SaveCheckpoint(*LoadCheckpoint(dir / "a.ckpt"), dir / "b.ckpt");
  EXPECT_EQ(testing::ReadFile(dir / "a.ckpt"), testing::ReadFile(dir / "b.ckpt"));
}

TEST(CheckpointTest, CorruptBytesRejected) {
  std::unique_ptr<GanModel> holder;
  GanModel& model = *TinyModel(holder);
  std::string bytes = SerializeCheckpoint(model);
  EXPECT_ANY_THROW(DeserializeCheckpoint(bytes.substr(0, bytes.size() / 2)));
  bytes[0] = 'X';
  EXPECT_ANY_THROW(DeserializeCheckpoint(bytes));
}

TEST(TrainTest, ResumeContinuesUninterruptedRun) {
  const auto pairs = TinyPairs();
  testing::TempDir dir("resume");
  std::unique_ptr<GanModel> a_holder;
  GanModel& a = *TinyModel(a_holder);
  TrainOptions first;
  first.out_dir = dir.path();
  first.max_steps = 3;
  const TrainResult head = train(a, pairs, first);
  ASSERT_TRUE(head.last_checkpoint.has_value());
  TrainOptions more;
  more.max_steps = 2;
  const TrainResult uninterrupted = train(a, pairs, more);

  auto b = LoadCheckpoint(*head.last_checkpoint);
  EXPECT_EQ(b->global_step, 3);
  const TrainResult resumed = train(*b, pairs, more);
  ASSERT_EQ(resumed.log.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(resumed.log[i].step, uninterrupted.log[i].step);
    EXPECT_EQ(resumed.log[i].epoch, uninterrupted.log[i].epoch);
    EXPECT_NEAR(resumed.log[i].d_loss_real, uninterrupted.log[i].d_loss_real, 1e-6);
    EXPECT_NEAR(resumed.log[i].d_loss_fake, uninterrupted.log[i].d_loss_fake, 1e-6);
    EXPECT_NEAR(resumed.log[i].g_adv, uninterrupted.log[i].g_adv, 1e-6);
    EXPECT_NEAR(resumed.log[i].g_fm, uninterrupted.log[i].g_fm, 1e-6);
  }
  const auto logged = ReadLossLog(dir / "reports" / "loss_log.csv");
  EXPECT_EQ(logged.size(), 3u);
}

TEST(TrainTest, SameSeedSameLog) {
  const auto pairs = TinyPairs();
  std::unique_ptr<GanModel> a_holder;
  std::unique_ptr<GanModel> b_holder;
  TrainOptions opts;
  opts.max_steps = 3;
  const auto a = train(*TinyModel(a_holder), pairs, opts);
  const auto b = train(*TinyModel(b_holder), pairs, opts);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(FormatLossRecord(a.log[i]), FormatLossRecord(b.log[i]));
}

TEST(TrainTest, EpochOrderIsAPermutation) {
  auto order = EpochOrder(3, 5, 10);
  EXPECT_EQ(order, EpochOrder(3, 5, 10));
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(order[i], i);
}

TEST(ModelSpaceTest, ImageRoundTrip) {
  core::RgbImage img(4, 2);
  for (int x = 0; x < 4; ++x) img.set(x, 1, {static_cast<std::uint8_t>(x * 80), 0, 255});
  const Tensor<float> t = ToModelSpace(img);
  EXPECT_FLOAT_EQ(t.at(2, 1, 0), 1.0f);
  EXPECT_FLOAT_EQ(t.at(1, 0, 0), -1.0f);
  EXPECT_EQ(ToRgbImage(t), img);
}

}  // namespace
}  // namespace histosynth::gan
