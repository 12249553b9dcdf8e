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
#include <span>
#include <string>
#include <vector>

#include "histosynth/core/label_grid.h"
#include "histosynth/nn/tensor.h"

namespace histosynth::seg {

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  /// Ground-truth pixels of the class (tp + fn).
  std::uint64_t support() const { return tp + fn; }
};

/// counts[i][c] for image i and class c.
struct ConfusionTensor {
  int n_classes = 0;
  std::vector<std::vector<ClassCounts>> counts;

  std::size_t n_images() const { return counts.size(); }
  std::uint64_t pixels(std::size_t image) const;
  /// Counts summed over images.
  std::vector<ClassCounts> Totals() const;
  /// Appends the images of another tensor with the same class count.
  void Append(const ConfusionTensor& other);
};

/// Single image. Throws std::invalid_argument on a size mismatch and
/// std::out_of_range when a label is >= n_classes.
ConfusionTensor confusion(const core::LabelGrid& pred, const core::LabelGrid& gt, int n_classes);
ConfusionTensor confusion(std::span<const core::LabelGrid> pred, std::span<const core::LabelGrid> gt,
                          int n_classes);

/// Per image and class ratios. A ratio whose denominator is zero is 1 when the
/// class is absent from both prediction and ground truth and 0 otherwise.
double IoU(const ClassCounts& c);
double Precision(const ClassCounts& c);
double Recall(const ClassCounts& c);
double Dice(const ClassCounts& c);

/// Mean IoU over images and classes.
double miou(const ConfusionTensor& ct);

/// Weighted metrics: each image contributes its per-class values weighted by
/// the class's share of that image's pixels, and images are averaged.
double wiou(const ConfusionTensor& ct);
double wprecision(const ConfusionTensor& ct);
double wrecall(const ConfusionTensor& ct);

/// Class probabilities for one image, channel c = class c.
using ProbabilityMap = nn::Tensor<double>;

struct TObjectiveOptions {
  /// Weight of the cross-entropy term: 1/4 by default, 1/C when set.
  bool ce_weight_one_over_classes = false;
  double probability_floor = 1e-12;
};

struct TObjectiveResult {
  double value = 0.0;  // +inf when the denominator is zero
  double mean_dice = 0.0;
  double cross_entropy = 0.0;  // pixel mean of -log p(true class)
  std::string diagnostic;
};

/// 1 / (mean over classes of dataset-level Dice + w * cross_entropy).
TObjectiveResult tobjective(const ConfusionTensor& ct, std::span<const ProbabilityMap> probs,
                            std::span<const core::LabelGrid> gt, const TObjectiveOptions& options = {});

}  // namespace histosynth::seg
