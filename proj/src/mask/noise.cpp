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
#include "histosynth/mask/noise.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace histosynth::mask {

double NoiseProbability(const NoiseSpec& spec, int width, int height) {
  const double d = spec.mean_distance;
  if (std::isnan(d) || d < 1.0) {
    throw std::invalid_argument("noise mean distance must be >= 1");
  }
  const double diagonal = std::hypot(static_cast<double>(width), static_cast<double>(height));
  if (std::isinf(d) || d > diagonal) return 0.0;
  return 1.0 / (d * d);
}

core::LabelGrid inject_noise(const core::LabelGrid& mask, const NoiseSpec& spec) {
  if (mask.resolution() != core::Resolution::kPolygons) {
    throw std::invalid_argument("noise is injected into POLYGONS masks only");
  }
  const double p = NoiseProbability(spec, mask.width(), mask.height());
  core::LabelGrid out = mask;
  out.set_resolution(core::Resolution::kPolygonsNoise);
  if (p == 0.0) return out;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (core::ClassId& id : out.labels()) {
    if (unit(rng) < p) id = core::ClassId::kNoise;
  }
  return out;
}

}  // namespace histosynth::mask
