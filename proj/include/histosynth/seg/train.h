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
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histosynth/core/manifest.h"
#include "histosynth/seg/metrics.h"
#include "histosynth/seg/unetpp.h"

namespace histosynth::seg {

template <typename T>
nn::Tensor<T> Softmax(const nn::Tensor<T>& logits);

template <typename T>
struct SegLoss {
  double loss = 0.0;
  double dice_loss = 0.0;  // 1 - mean soft Dice over classes
  double cross_entropy = 0.0;
  nn::Tensor<T> grad_logits;
};

/// (1 - mean soft Dice) + ce_weight * pixel-mean cross-entropy, with the
/// gradient with respect to the logits.
template <typename T>
SegLoss<T> SegmentationLoss(const nn::Tensor<T>& logits, const core::LabelGrid& gt, double ce_weight = 0.25);

/// Image in [-1, 1], channels first.
nn::Tensor<float> SegmenterInput(const core::RgbImage& image);

struct SegTrainConfig {
  SegmenterConfig model;
  std::int64_t steps = 600;
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double ce_weight = 0.25;
  /// Random horizontal and vertical flips of each training pair.
  bool augment_flips = true;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::int64_t checkpoint_every = 0;

  void Validate() const;
  bool operator==(const SegTrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const SegTrainConfig& c);
void from_json(const nlohmann::json& j, SegTrainConfig& c);

struct SegLossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double dice_loss = 0.0;
  double cross_entropy = 0.0;

  bool operator==(const SegLossRecord&) const = default;
};

struct SegTrainResult {
  std::unique_ptr<UNetPlusPlus<float>> model;
  std::vector<SegLossRecord> log;
};

class SegTrainingDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Masks must hold base classes only. Deterministic in config.seed.
SegTrainResult train_segmenter(std::span<const core::PairedSample> train, const SegTrainConfig& config);

struct Prediction {
  core::LabelGrid labels;
  ProbabilityMap probabilities;
};

Prediction Predict(const UNetPlusPlus<float>& model, const core::RgbImage& image);

struct ClassReport {
  std::string name;
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double dice = 0.0;
  std::uint64_t support = 0;
};

struct SegReport {
  double miou = 0.0;
  double wiou = 0.0;
  double wprecision = 0.0;
  double wrecall = 0.0;
  TObjectiveResult tobjective;
  std::vector<ClassReport> per_class;  // dataset-level counts
  std::size_t n_images = 0;
};

SegReport MakeSegReport(const ConfusionTensor& ct, std::span<const ProbabilityMap> probs,
                        std::span<const core::LabelGrid> gt);
SegReport evaluate_segmenter(const UNetPlusPlus<float>& model, std::span<const core::PairedSample> test);

nlohmann::json SegReportToJson(const SegReport& report);
/// class,iou,precision,recall,dice,support
std::string SegReportClassCsv(const SegReport& report);

struct ArmResult {
  std::string name;
  nlohmann::json config;
  std::size_t n_train = 0;
  SegReport report;
  std::vector<SegLossRecord> log;
};

struct AugmentationReport {
  std::vector<ArmResult> arms;  // baseline, real+synthetic, real+control
  /// Metric differences of each augmented arm against the baseline.
  nlohmann::json deltas;
};

/// Trains the three arms with identical configs and seeds. Rejects a test set
/// that shares sample ids or image content with any training set.
AugmentationReport augmentation_experiment(std::span<const core::PairedSample> real_train,
                                           std::span<const core::PairedSample> synth,
                                           std::span<const core::PairedSample> control_real,
                                           std::span<const core::PairedSample> test, const SegTrainConfig& config);

nlohmann::json AugmentationReportToJson(const AugmentationReport& report);

void SaveSegmenter(const UNetPlusPlus<float>& model, const std::filesystem::path& path);
std::unique_ptr<UNetPlusPlus<float>> LoadSegmenter(const std::filesystem::path& path);

}  // namespace histosynth::seg
