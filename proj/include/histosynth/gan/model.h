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
#include <string>

#include "histosynth/core/label_grid.h"
#include "histosynth/gan/config.h"
#include "histosynth/gan/networks.h"
#include "histosynth/nn/adam.h"

namespace histosynth::gan {

/// Generator, multiscale discriminator, their optimizers and the position
/// in the training schedule.
class GanModel {
 public:
  GanModel(const GeneratorConfig& g, const DiscriminatorConfig& d, const TrainConfig& train);

  GanModel(const GanModel&) = delete;
  GanModel& operator=(const GanModel&) = delete;

  Generator<float>& generator() { return *generator_; }
  const Generator<float>& generator() const { return *generator_; }
  MultiscaleDiscriminator<float>& discriminator() { return *discriminator_; }
  const MultiscaleDiscriminator<float>& discriminator() const { return *discriminator_; }
  nn::Adam<float>& generator_optimizer() { return *g_opt_; }
  nn::Adam<float>& discriminator_optimizer() { return *d_opt_; }

  const GeneratorConfig& generator_config() const { return g_config_; }
  const DiscriminatorConfig& discriminator_config() const { return d_config_; }
  const TrainConfig& train_config() const { return train_config_; }

  nn::ParameterList<float> GeneratorParameters() { return generator_->Parameters(); }
  nn::ParameterList<float> DiscriminatorParameters() { return discriminator_->Parameters(); }

  /// Next epoch to run and the number of samples of it already consumed.
  int epoch = 0;
  int step_in_epoch = 0;
  std::int64_t global_step = 0;

 private:
  GeneratorConfig g_config_;
  DiscriminatorConfig d_config_;
  TrainConfig train_config_;
  std::unique_ptr<Generator<float>> generator_;
  std::unique_ptr<MultiscaleDiscriminator<float>> discriminator_;
  std::unique_ptr<nn::Adam<float>> g_opt_;
  std::unique_ptr<nn::Adam<float>> d_opt_;
};

/// Inference: a 3 x H x W image in [-1, 1]. Throws for a label stack of the
/// wrong channel count or spatial size.
nn::Tensor<float> generate(const GanModel& model, const nn::Tensor<float>& label_stack);

/// Per-scale score maps (raw logits) and features for (labels, image).
DiscriminatorOutput<float> discriminate(const GanModel& model, const nn::Tensor<float>& label_stack,
                                        const nn::Tensor<float>& image);

/// [0, 255] to [-1, 1] and back (with rounding and clamping).
nn::Tensor<float> ToModelSpace(const core::RgbImage& image);
core::RgbImage ToRgbImage(const nn::Tensor<float>& image);

/// Convenience: one-hot encodes the mask and runs the generator.
core::RgbImage SynthesizeImage(const GanModel& model, const core::LabelGrid& mask);

// Checkpoint container: 8-byte magic "HSGANCKP", u32 format version, u64
// header length, JSON header (configs, schedule position, tensor table), then
// raw little-endian float32 blobs in table order: generator parameters,
// discriminator parameters, then first/second Adam moments of each.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(GanModel& model);
std::unique_ptr<GanModel> DeserializeCheckpoint(const std::string& bytes);
/// Overwrites parameters, optimizer state and schedule position in place.
void RestoreCheckpoint(GanModel& model, const std::string& bytes);

void SaveCheckpoint(GanModel& model, const std::filesystem::path& path);
std::unique_ptr<GanModel> LoadCheckpoint(const std::filesystem::path& path);

}  // namespace histosynth::gan
