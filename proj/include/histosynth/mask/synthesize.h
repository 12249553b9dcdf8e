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

/// Layout of a procedurally generated mask. The two fractions are shares of
/// the image area; tumor (PDL1_POS + PDL1_NEG) fills the remainder.
struct MaskLayout {
  int n_regions = 6;
  /// Blob radius relative to min(width, height).
  double region_scale = 0.18;
  double inflammation_fraction = 0.15;
  double other_fraction = 0.45;
};

struct SynthesisOptions {
  double tolerance = 0.02;
  int max_iterations = 50;
};

/// Random blob layout whose compute_tps() is within options.tolerance of
/// target_tps. Tumor-positive regions are grown or shrunk by bisecting the
/// level of a smooth random field. Throws std::invalid_argument for
/// infeasible layouts, e.g. no tumor area with a positive target.
core::LabelGrid synthesize_mask(double target_tps, const MaskLayout& layout, int width, int height,
                                std::uint64_t seed, const SynthesisOptions& options = {});

}  // namespace histosynth::mask
