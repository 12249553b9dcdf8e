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
#include <string_view>

#include "histosynth/core/label_grid.h"

namespace histosynth::core {

/// Per-class pixel counts, indexed by palette index.
using ClassHistogram = std::array<std::uint64_t, kNumLabels>;

ClassHistogram class_histogram(const LabelGrid& mask);

/// Area surrogate of the tumor proportion score:
/// PDL1_POS / (PDL1_POS + PDL1_NEG), or 0 for tumor-free masks.
double compute_tps(const LabelGrid& mask);

enum class TpsClass { kLow, kMid, kHigh };

/// Bands are half-open and lower-inclusive: [0, 0.01), [0.01, 0.5), [0.5, 1].
/// Throws std::out_of_range outside [0, 1].
TpsClass tps_class(double tps);

std::string_view TpsClassName(TpsClass c);

}  // namespace histosynth::core
