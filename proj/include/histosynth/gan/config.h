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
#include <string_view>

#include <nlohmann/json.hpp>

#include "histosynth/core/label_grid.h"

namespace histosynth::gan {

/// Single global generator: 7x7 stem, strided downsampling, residual blocks,
/// fractionally-strided upsampling and a tanh head.
struct GeneratorConfig {
  int input_labels = core::kNumLabels;
  int base_channels = 32;
  int n_downsample = 2;
  int n_resblocks = 3;
  int output_channels = 3;

  static GeneratorConfig Desk() { return {}; }
  static GeneratorConfig FullScale() { return {core::kNumLabels, 64, 4, 9, 3}; }
  void Validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

/// K patch discriminators of identical shape; scale k sees the input
/// average-pooled k times.
struct DiscriminatorConfig {
  int n_scales = 2;
  int n_layers = 3;
  int base_channels = 32;

  static DiscriminatorConfig Desk() { return {}; }
  static DiscriminatorConfig FullScale() { return {2, 3, 64}; }
  void Validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

/// kMseDBceG: the discriminator regresses sigmoid probabilities onto 1/0 with a
/// squared error while the generator uses binary cross-entropy.
/// kLsgan: squared error on raw scores for both players.
/// kBce: binary cross-entropy for both players.
enum class GanLossMode { kMseDBceG, kLsgan, kBce };

std::string_view GanLossModeName(GanLossMode mode);
GanLossMode ParseGanLossMode(std::string_view name);

struct TrainConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  int epochs_constant = 500;
  int epochs_decay = 200;
  double lambda_fm = 1.0;
  double init_std = 0.02;
  std::uint64_t seed = 0;
  GanLossMode loss_mode = GanLossMode::kMseDBceG;

  int total_epochs() const { return epochs_constant + epochs_decay; }
  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace histosynth::gan
