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
#include <fstream>

#include "histosynth/corpus/pseudo_histology.h"
#include "histosynth/similarity/embedder.h"
#include "histosynth/similarity/frechet.h"
#include "histosynth/similarity/sweep.h"
#include "test_util.h"

namespace histosynth::similarity {
namespace {

Eigen::VectorXd Vec(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd Mat(const nlohmann::json& j) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

GaussianStats Stats(Eigen::VectorXd mean, Eigen::MatrixXd cov) { return {std::move(mean), std::move(cov)}; }

TEST(GaussianFitTest, IdenticalVectorsHaveZeroCovariance) {
  const GaussianStats s = fit_gaussian_stats(std::vector<std::vector<double>>{{1, 2, 3}, {1, 2, 3}});
  EXPECT_EQ(s.covariance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GaussianFitTest, HandComputedPair) {
  const GaussianStats s = fit_gaussian_stats(std::vector<std::vector<double>>{{0, 0}, {2, 2}});
  EXPECT_DOUBLE_EQ(s.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 1.0);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(s.covariance(r, c), 2.0);
  }
}

TEST(GaussianFitTest, MatchesReferenceFit) {
  const nlohmann::json fx = testing::LoadFixture("frechet_oracle.json")["fit"];
  const GaussianStats s = fit_gaussian_stats(Mat(fx["features"]));
  const Eigen::VectorXd mean = Vec(fx["mean"]);
  const Eigen::MatrixXd cov = Mat(fx["covariance"]);
  EXPECT_LE((s.mean - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s.covariance - cov).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GaussianFitTest, RejectsTooFewOrRagged) {
  EXPECT_THROW(fit_gaussian_stats(std::vector<std::vector<double>>{{1, 2}}), std::invalid_argument);
  EXPECT_THROW(fit_gaussian_stats(std::vector<std::vector<double>>{{1, 2}, {1}}), std::invalid_argument);
}

TEST(FrechetTest, MatchesMatrixRootReference) {
  for (const auto& c : testing::LoadFixture("frechet_oracle.json")["cases"]) {
    const GaussianStats a = Stats(Vec(c["mean_a"]), Mat(c["cov_a"]));
    const GaussianStats b = Stats(Vec(c["mean_b"]), Mat(c["cov_b"]));
    const double expected = c["fd"].get<double>();
    EXPECT_NEAR(frechet_distance(a, b), expected, 1e-8 * std::max(1.0, expected)) << "dim " << a.dim();
  }
}

TEST(FrechetTest, IdenticalStatsGiveZero) {
  const nlohmann::json c = testing::LoadFixture("frechet_oracle.json")["cases"][5];
  const GaussianStats a = Stats(Vec(c["mean_a"]), Mat(c["cov_a"]));
  EXPECT_LE(frechet_distance(a, a), 1e-8);
}

TEST(FrechetTest, OneDimensionalMeanShift) {
  const GaussianStats a = Stats(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const GaussianStats b = Stats(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  EXPECT_NEAR(frechet_distance(a, b), 9.0, 1e-12);
  EXPECT_DOUBLE_EQ(frechet_distance_equal_covariance(a, b), 9.0);
}

TEST(FrechetTest, CommutingDiagonals) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const GaussianStats a = Stats(zero, Eigen::Vector2d(1.0, 4.0).asDiagonal());
  const GaussianStats b = Stats(zero, Eigen::Vector2d(4.0, 1.0).asDiagonal());
  EXPECT_NEAR(frechet_distance(a, b), 2.0, 1e-12);
}

TEST(FrechetTest, RejectsMismatchedOrNonFinite) {
  const GaussianStats a = Stats(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const GaussianStats b = Stats(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(frechet_distance(a, b), std::invalid_argument);
  GaussianStats bad = a;
  bad.mean(0) = std::nan("");
  EXPECT_THROW(frechet_distance(a, bad), std::invalid_argument);
  GaussianStats indefinite = a;
  indefinite.covariance(0, 0) = -1.0;
  EXPECT_THROW(frechet_distance(a, indefinite), std::invalid_argument);
  EXPECT_THROW(frechet_distance_equal_covariance(a, Stats(Eigen::VectorXd::Zero(2), 2 * Eigen::MatrixXd::Identity(2, 2))),
               std::invalid_argument);
}

TEST(PsdSqrtTest, SquaresBack) {
  Eigen::MatrixXd m(3, 3);
  m << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Eigen::MatrixXd r = PsdSqrt(m);
  EXPECT_LE((r * r - m).cwiseAbs().maxCoeff(), 1e-12);
}

std::vector<core::RgbImage> CorpusImages(int count, std::uint64_t seed) {
  corpus::CorpusOptions opts;
  opts.count = count;
  opts.seed = seed;
  std::vector<core::RgbImage> out;
  for (auto& s : corpus::GenerateCorpus(opts)) out.push_back(std::move(s.image));
  return out;
}

TEST(EmbedderTest, ToyIsDeterministicAndSized) {
  const ToyEmbedder toy(3);
  const auto images = CorpusImages(2, 1);
  const auto a = toy.Embed(images[0]);
  EXPECT_EQ(static_cast<int>(a.size()), toy.dim());
  EXPECT_EQ(a, ToyEmbedder(3).Embed(images[0]));
  EXPECT_NE(a, toy.Embed(images[1]));
  EXPECT_THROW(toy.Embed(core::RgbImage(64, 64)), std::invalid_argument);
  for (double v : a) EXPECT_TRUE(std::isfinite(v));
}

TEST(EmbedderTest, PrepareResizesToInput) {
  const ProjectionEmbedder proj(0);
  const core::RgbImage big(256, 128, {10, 20, 30});
  const core::RgbImage small = PrepareForEmbedder(big, proj);
  EXPECT_EQ(small.width(), 128);
  EXPECT_EQ(small.height(), 64);
  EXPECT_EQ(small.at(5, 5, 2), 30);
}

TEST(EmbedderTest, EmbedAllMatchesSequential) {
  const ToyEmbedder toy(0);
  const auto images = CorpusImages(5, 2);
  const auto parallel = EmbedAll(images, toy, 3);
  for (std::size_t i = 0; i < images.size(); ++i) EXPECT_EQ(parallel[i], toy.Embed(images[i]));
}

TEST(EmbedderTest, LinearWeightsFile) {
  testing::TempDir dir("embedder");
  nlohmann::json j = {{"name", "lin"},        {"input_width", 4}, {"input_height", 2},
                      {"grid_width", 1},      {"grid_height", 1}, {"activation", "relu"},
                      {"weights", {{1.0, 0.0, 0.0}, {0.0, 0.0, -1.0}}}, {"bias", {0.5, 0.0}}};
  std::ofstream(dir / "w.json") << j.dump();
  const auto e = MakeEmbedder("file:" + (dir / "w.json").string());
  EXPECT_EQ(e->name(), "lin");
  EXPECT_EQ(e->dim(), 2);
  const auto v = e->Embed(core::RgbImage(4, 2, {255, 0, 51}));
  EXPECT_DOUBLE_EQ(v[0], 1.5);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  j["weights"] = {{1.0, 0.0}};
  j["bias"] = {0.0};
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_THROW(LinearWeightsEmbedder::Load(dir / "bad.json"), std::runtime_error);
  EXPECT_THROW(MakeEmbedder("inception"), std::invalid_argument);
}

TEST(SetSimilarityTest, SelfDistanceIsZero) {
  const ToyEmbedder toy(0);
  const auto images = CorpusImages(30, 3);
  EXPECT_LE(evaluate_set_similarity(images, images, toy), 1e-8);
}

TEST(SetSimilarityTest, MonotoneInSwapCount) {
  const ToyEmbedder toy(0);
  const auto real = CorpusImages(30, 3);
  auto outliers = real;
  for (auto& img : outliers) {
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(255 - v);
  }
  double previous = 0.0;
  for (int swaps : {1, 2, 4}) {
    auto mixed = real;
    for (int k = 0; k < swaps; ++k) mixed[static_cast<std::size_t>(k)] = outliers[static_cast<std::size_t>(k)];
    const double fd = evaluate_set_similarity(real, mixed, toy);
    EXPECT_GT(fd, previous) << swaps << " swaps";
    previous = fd;
  }
  EXPECT_THROW(evaluate_set_similarity(std::span(real).first(1), real, toy), std::invalid_argument);
}

TEST(SweepTest, ReportsOneRunPerFrequencyAndArgmin) {
  corpus::CorpusOptions opts;
  opts.count = 6;
  opts.width = 32;
  opts.height = 32;
  opts.seed = 1;
  const auto train = corpus::GenerateCorpus(opts);
  opts.seed = 2;
  const auto eval = corpus::GenerateCorpus(opts);
  SweepConfig cfg;
  cfg.generator = {core::kNumLabels, 4, 1, 1, 3};
  cfg.discriminator = {2, 2, 4};
  cfg.steps_per_model = 2;
  cfg.include_polygons_baseline = false;
  const ToyEmbedder toy(0, 4, 32, 32);
  const FeatureEmbedder* embedders[] = {&toy};
  const std::vector<double> freqs = {4, 8, 16};
  const SweepReport report = noise_frequency_sweep(freqs, {train, eval, {}}, cfg, embedders);
  ASSERT_EQ(report.runs.size(), 3u);
  double best = INFINITY;
  double argmin = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(report.runs[i].label, "noise_d" + std::to_string(static_cast<int>(freqs[i])));
    ASSERT_FALSE(report.runs[i].error.has_value()) << *report.runs[i].error;
    const double fd = report.runs[i].fd.at("toy");
    EXPECT_GE(fd, 0.0);
    if (fd < best) {
      best = fd;
      argmin = freqs[i];
    }
  }
  ASSERT_TRUE(report.optimum.has_value());
  EXPECT_EQ(*report.optimum, argmin);
  const nlohmann::json j = SweepReportToJson(report);
  EXPECT_EQ(j["runs"].size(), 3u);
}

TEST(SweepTest, RejectsSingleFrequency) {
  const std::vector<core::PairedSample> none;
  const ToyEmbedder toy(0);
  const FeatureEmbedder* embedders[] = {&toy};
  const std::vector<double> one = {15};
  EXPECT_THROW(noise_frequency_sweep(one, {none, none, {}}, SweepConfig{}, embedders), std::invalid_argument);
}

TEST(SweepTest, WithNoiseIsSeededPerSample) {
  corpus::CorpusOptions opts;
  opts.count = 3;
  opts.seed = 5;
  const auto samples = corpus::GenerateCorpus(opts);
  const auto a = WithNoise(samples, 4.0, 1);
  const auto b = WithNoise(samples, 4.0, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].mask, b[i].mask);
    EXPECT_EQ(a[i].mask.resolution(), core::Resolution::kPolygonsNoise);
  }
  EXPECT_NE(a[0].mask, WithNoise(samples, 4.0, 2)[0].mask);
}

}  // namespace
}  // namespace histosynth::similarity
