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

#include "histosynth/core/label_grid.h"
#include "histosynth/nn/tensor.h"

namespace histosynth::mask {

/// n_labels x H x W stack with a single 1 per pixel, at the channel equal to
/// the pixel's palette index.
nn::Tensor<float> one_hot_encode(const core::LabelGrid& mask, int n_labels = core::kNumLabels);

/// Inverse of one_hot_encode. Every pixel must hold exactly one 1.
core::LabelGrid one_hot_decode(const nn::Tensor<float>& stack,
                               core::Resolution tag = core::Resolution::kPolygons);

}  // namespace histosynth::mask
