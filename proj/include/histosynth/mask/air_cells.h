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

#include <array>
#include <cstdint>

#include "histosynth/core/label_grid.h"

namespace histosynth::mask {

struct ThresholdSpec {
  enum class Mode { kFixed, kOtsu };

  int air_threshold = 220;
  int cell_threshold = 120;
  Mode mode = Mode::kFixed;
};

/// Grayscale histogram of the whole image.
std::array<std::uint64_t, 256> GrayHistogram(const core::RgbImage& image);

/// Three-class Otsu: returns (low, high) with low < high maximising the
/// between-class variance of [0, low], (low, high], (high, 255].
std::array<int, 2> MultiOtsuThresholds(const std::array<std::uint64_t, 256>& histogram);

/// The thresholds actually applied to an image (OTSU mode resolved).
ThresholdSpec ResolveThresholds(const core::RgbImage& image, const ThresholdSpec& spec);

/// Grayscale g > air_threshold becomes AIR, g < cell_threshold becomes CELL,
/// other pixels keep the base label. Output tag is POLYGONS_AIR_CELLS.
core::LabelGrid extract_air_cells(const core::RgbImage& image, const core::LabelGrid& base,
                                  const ThresholdSpec& thresholds);

}  // namespace histosynth::mask
