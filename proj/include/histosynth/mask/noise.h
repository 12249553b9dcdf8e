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

#include "histosynth/core/label_grid.h"

namespace histosynth::mask {

/// Density of single-pixel NOISE labels. Each pixel is activated
/// independently with probability 1 / mean_distance^2, so one noise pixel
/// falls in every mean_distance x mean_distance area on average.
struct NoiseSpec {
  double mean_distance = 15.0;
  std::uint64_t seed = 0;
};

/// Activation probability for a grid. Distances longer than the grid
/// diagonal (or infinite) give 0. Throws for mean_distance < 1 or NaN.
double NoiseProbability(const NoiseSpec& spec, int width, int height);

/// Relabels pixels of a POLYGONS mask to NOISE. Deterministic given the seed;
/// the output is tagged POLYGONS_NOISE.
core::LabelGrid inject_noise(const core::LabelGrid& mask, const NoiseSpec& spec);

}  // namespace histosynth::mask
