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

#include <memory>
#include <vector>

#include "histosynth/gan/config.h"
#include "histosynth/nn/layers.h"

namespace histosynth::gan {

template <typename T>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& config);

  /// Label stack (input_labels x H x W) to a 3 x H x W image in [-1, 1].
  /// H and W must be divisible by 2^n_downsample.
  nn::Tensor<T> Infer(const nn::Tensor<T>& labels) const;
  nn::Tensor<T> Forward(const nn::Tensor<T>& labels);
  /// Returns the gradient w.r.t. the label stack.
  nn::Tensor<T> Backward(const nn::Tensor<T>& grad_image);

  nn::ParameterList<T> Parameters();
  const GeneratorConfig& config() const { return config_; }

 private:
  void CheckInput(const nn::Tensor<T>& labels) const;

  GeneratorConfig config_;
  nn::Sequential<T> net_{"generator"};
};

/// Scores and intermediate features of every discriminator scale.
template <typename T>
struct DiscriminatorOutput {
  std::vector<nn::Tensor<T>> scores;                 // per scale, 1 x h x w raw logits
  std::vector<std::vector<nn::Tensor<T>>> features;  // per scale, per layer
};

/// One PatchGAN-style network. Features are the outputs of every block
/// before the final scoring convolution.
template <typename T>
class PatchDiscriminator {
 public:
  PatchDiscriminator(int in_channels, const DiscriminatorConfig& config, int scale_index);

  nn::Tensor<T> Infer(const nn::Tensor<T>& x, std::vector<nn::Tensor<T>>* features) const;
  nn::Tensor<T> Forward(const nn::Tensor<T>& x, std::vector<nn::Tensor<T>>* features);
  /// grad_features may be empty or hold one entry per feature (empty tensors
  /// are skipped).
  nn::Tensor<T> Backward(const nn::Tensor<T>& grad_score,
                         const std::vector<nn::Tensor<T>>& grad_features);

  nn::ParameterList<T> Parameters();
  void SetParamGradEnabled(bool enabled);
  std::size_t num_features() const { return blocks_.size() - 1; }

 private:
  std::vector<std::unique_ptr<nn::Sequential<T>>> blocks_;
};

template <typename T>
class MultiscaleDiscriminator {
 public:
  MultiscaleDiscriminator(int in_channels, const DiscriminatorConfig& config);

  DiscriminatorOutput<T> Infer(const nn::Tensor<T>& x) const;
  DiscriminatorOutput<T> Forward(const nn::Tensor<T>& x);
  /// Gradients shaped like the last Forward() output; feature gradients may
  /// be left empty. Returns the gradient w.r.t. the input.
  nn::Tensor<T> Backward(const std::vector<nn::Tensor<T>>& grad_scores,
                         const std::vector<std::vector<nn::Tensor<T>>>& grad_features);

  nn::ParameterList<T> Parameters();
  void SetParamGradEnabled(bool enabled);
  PatchDiscriminator<T>& scale(int k) { return *scales_[static_cast<std::size_t>(k)]; }
  int num_scales() const { return static_cast<int>(scales_.size()); }
  const DiscriminatorConfig& config() const { return config_; }

  /// The input of scale k: x average-pooled k times.
  static nn::Tensor<T> Downsample(const nn::Tensor<T>& x, int times);

 private:
  DiscriminatorConfig config_;
  int in_channels_;
  std::vector<std::unique_ptr<PatchDiscriminator<T>>> scales_;
  std::vector<nn::AvgPool2<T>> pools_;
};

/// Spatial shape of every feature map and the score map of a single scale,
/// from the convolution arithmetic alone.
std::vector<std::pair<int, int>> PatchDiscriminatorShapes(const DiscriminatorConfig& config,
                                                          int height, int width);

extern template class Generator<float>;
extern template class Generator<double>;
extern template class PatchDiscriminator<float>;
extern template class PatchDiscriminator<double>;
extern template class MultiscaleDiscriminator<float>;
extern template class MultiscaleDiscriminator<double>;

}  // namespace histosynth::gan
