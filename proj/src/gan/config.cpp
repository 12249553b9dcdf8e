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
#include "histosynth/gan/config.h"

#include <stdexcept>
#include <string>

namespace histosynth::gan {

void GeneratorConfig::Validate() const {
  if (input_labels <= 0 || base_channels <= 0 || n_downsample < 0 || n_resblocks < 0) {
    throw std::invalid_argument("invalid generator configuration");
  }
  if (output_channels != 3) throw std::invalid_argument("generator must output 3 channels");
}

void DiscriminatorConfig::Validate() const {
  if (n_scales < 1) throw std::invalid_argument("discriminator needs at least one scale");
  if (n_layers < 1 || base_channels <= 0) {
    throw std::invalid_argument("invalid discriminator configuration");
  }
}

void TrainConfig::Validate() const {
  if (!(lr > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("invalid optimizer settings");
  }
  if (batch_size != 1) throw std::invalid_argument("only minibatches of size 1 are supported");
  if (epochs_constant < 0 || epochs_decay < 0 || total_epochs() <= 0) {
    throw std::invalid_argument("epoch counts must be non-negative with a positive total");
  }
  if (!(lambda_fm >= 0.0) || !(init_std > 0.0)) {
    throw std::invalid_argument("lambda_fm must be >= 0 and init_std > 0");
  }
}

std::string_view GanLossModeName(GanLossMode mode) {
  switch (mode) {
    case GanLossMode::kMseDBceG:
      return "mse_d_bce_g";
    case GanLossMode::kLsgan:
      return "lsgan";
    case GanLossMode::kBce:
      return "bce";
  }
  return "unknown";
}

GanLossMode ParseGanLossMode(std::string_view name) {
  if (name == "mse_d_bce_g" || name == "default") return GanLossMode::kMseDBceG;
  if (name == "lsgan") return GanLossMode::kLsgan;
  if (name == "bce") return GanLossMode::kBce;
  throw std::invalid_argument("unknown GAN loss mode '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"input_labels", c.input_labels},   {"base_channels", c.base_channels},
       {"n_downsample", c.n_downsample},   {"n_resblocks", c.n_resblocks},
       {"output_channels", c.output_channels}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  j.at("input_labels").get_to(c.input_labels);
  j.at("base_channels").get_to(c.base_channels);
  j.at("n_downsample").get_to(c.n_downsample);
  j.at("n_resblocks").get_to(c.n_resblocks);
  j.at("output_channels").get_to(c.output_channels);
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"n_scales", c.n_scales}, {"n_layers", c.n_layers}, {"base_channels", c.base_channels}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  j.at("n_scales").get_to(c.n_scales);
  j.at("n_layers").get_to(c.n_layers);
  j.at("base_channels").get_to(c.base_channels);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"batch_size", c.batch_size},
       {"epochs_constant", c.epochs_constant},
       {"epochs_decay", c.epochs_decay},
       {"lambda_fm", c.lambda_fm},
       {"init_std", c.init_std},
       {"seed", c.seed},
       {"loss_mode", std::string(GanLossModeName(c.loss_mode))}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("lr").get_to(c.lr);
  j.at("beta1").get_to(c.beta1);
  j.at("beta2").get_to(c.beta2);
  j.at("batch_size").get_to(c.batch_size);
  j.at("epochs_constant").get_to(c.epochs_constant);
  j.at("epochs_decay").get_to(c.epochs_decay);
  j.at("lambda_fm").get_to(c.lambda_fm);
  j.at("init_std").get_to(c.init_std);
  j.at("seed").get_to(c.seed);
  c.loss_mode = ParseGanLossMode(j.at("loss_mode").get<std::string>());
}

}  // namespace histosynth::gan
