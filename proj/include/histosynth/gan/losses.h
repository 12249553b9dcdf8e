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

#include <vector>

#include "histosynth/gan/config.h"
#include "histosynth/nn/tensor.h"

namespace histosynth::gan {

enum class Target { kReal, kFake };

/// Criterion of the public loss helper below.
enum class ScoreLoss {
  kLsgan,  // squared error of raw scores to 1 (real) / 0 (fake)
  kBce,    // binary cross-entropy of probability scores, clamped at 1e-12
};

/// Patch scores per discriminator scale. The loss is averaged over the
/// patches of each scale and then over the scales. Throws for an empty or
/// non-finite score set.
double gan_loss(const std::vector<std::vector<double>>& scores, Target target, ScoreLoss mode);

/// Sum over every (scale, layer) pair of the mean absolute difference between
/// real and fake features, i.e. each layer weighted by 1 / element count.
template <typename T>
double feature_matching_loss(const std::vector<std::vector<nn::Tensor<T>>>& real_features,
                             const std::vector<std::vector<nn::Tensor<T>>>& fake_features);

/// adv + lambda_fm * fm.
double total_generator_objective(double adv, double fm, double lambda_fm);

/// Constant learning rate for epochs_constant epochs, then a linear ramp that
/// reaches exactly 0 at epoch epochs_constant + epochs_decay.
double lr_at_epoch(const TrainConfig& config, int epoch);

// ---------------------------------------------------------------------
// Differentiable forms used by the trainer. Scores are raw discriminator
// logits; each returns the loss and fills grads with dLoss/dInput.

enum class Criterion {
  kMseOfProbability,  // (sigmoid(x) - t)^2
  kMseOfScore,        // (x - t)^2
  kBinaryCrossEntropy,
};

Criterion DiscriminatorCriterion(GanLossMode mode);
Criterion GeneratorCriterion(GanLossMode mode);

template <typename T>
double AdversarialLoss(const std::vector<nn::Tensor<T>>& logits, Target target,
                       Criterion criterion, std::vector<nn::Tensor<T>>* grads);

template <typename T>
double FeatureMatchingLoss(const std::vector<std::vector<nn::Tensor<T>>>& real_features,
                           const std::vector<std::vector<nn::Tensor<T>>>& fake_features,
                           double weight, std::vector<std::vector<nn::Tensor<T>>>* grads);

}  // namespace histosynth::gan
