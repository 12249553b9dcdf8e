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

#include <nlohmann/json.hpp>

#include "histosynth/core/label_grid.h"
#include "histosynth/nn/layers.h"

namespace histosynth::seg {

struct SegmenterConfig {
  int input_channels = 3;
  int n_classes = core::kNumBaseClasses;
  int depth = 3;
  int base_channels = 8;

  void Validate() const;
  bool operator==(const SegmenterConfig&) const = default;
};

void to_json(nlohmann::json& j, const SegmenterConfig& c);
void from_json(const nlohmann::json& j, SegmenterConfig& c);

/// Nested-skip encoder/decoder. Node (i, j) sits at resolution level i; column
/// 0 is the encoder, and node (i, j > 0) convolves the concatenation of nodes
/// (i, 0..j-1) with the upsampled node (i+1, j-1). A 1x1 head on node
/// (0, depth) produces per-class logits.
template <typename T>
class UNetPlusPlus {
 public:
  explicit UNetPlusPlus(const SegmenterConfig& config);

  const SegmenterConfig& config() const { return config_; }

  nn::Tensor<T> Infer(const nn::Tensor<T>& image) const;
  nn::Tensor<T> Forward(const nn::Tensor<T>& image);
  /// Returns the gradient with respect to the input image.
  nn::Tensor<T> Backward(const nn::Tensor<T>& grad_logits);

  nn::ParameterList<T> Parameters();

 private:
  struct Node {
    std::unique_ptr<nn::Sequential<T>> block;
    std::unique_ptr<nn::Layer<T>> pool;      // column 0, level > 0
    std::unique_ptr<nn::Layer<T>> upsample;  // column > 0
    std::vector<int> input_channels;         // channel split of the concatenated input
  };

  Node& node(int i, int j) { return nodes_[static_cast<std::size_t>(i * (config_.depth + 1) + j)]; }
  const Node& node(int i, int j) const { return nodes_[static_cast<std::size_t>(i * (config_.depth + 1) + j)]; }
  void CheckInput(const nn::Tensor<T>& image) const;

  template <bool kTrain>
  nn::Tensor<T> Run(const nn::Tensor<T>& image);

  SegmenterConfig config_;
  std::vector<Node> nodes_;
  std::unique_ptr<nn::Conv2d<T>> head_;
};

/// He-normal weights, zero biases.
template <typename T>
void InitHe(const nn::ParameterList<T>& params, std::mt19937_64& rng);

}  // namespace histosynth::seg
