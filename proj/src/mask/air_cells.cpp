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
#include "histosynth/mask/air_cells.h"

#include <stdexcept>

namespace histosynth::mask {

std::array<std::uint64_t, 256> GrayHistogram(const core::RgbImage& image) {
  std::array<std::uint64_t, 256> h{};
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) ++h[image.Gray(x, y)];
  }
  return h;
}

std::array<int, 2> MultiOtsuThresholds(const std::array<std::uint64_t, 256>& histogram) {
  // Prefix sums of weight and first moment give each class in O(1).
  std::array<double, 257> w{};
  std::array<double, 257> m{};
  for (int i = 0; i < 256; ++i) {
    w[i + 1] = w[i] + static_cast<double>(histogram[i]);
    m[i + 1] = m[i] + static_cast<double>(histogram[i]) * i;
  }
  const auto term = [&](int lo, int hi) {  // levels [lo, hi]
    const double weight = w[hi + 1] - w[lo];
    if (weight <= 0.0) return 0.0;
    const double moment = m[hi + 1] - m[lo];
    return moment * moment / weight;
  };
  double best = -1.0;
  std::array<int, 2> best_pair{84, 170};
  for (int low = 0; low < 254; ++low) {
    for (int high = low + 1; high < 255; ++high) {
      const double score = term(0, low) + term(low + 1, high) + term(high + 1, 255);
      if (score > best) {
        best = score;
        best_pair = {low, high};
      }
    }
  }
  return best_pair;
}

ThresholdSpec ResolveThresholds(const core::RgbImage& image, const ThresholdSpec& spec) {
  if (spec.mode == ThresholdSpec::Mode::kFixed) {
    if (spec.air_threshold < 0 || spec.air_threshold > 255 || spec.cell_threshold < 0 ||
        spec.cell_threshold > 255) {
      throw std::invalid_argument("thresholds must lie in [0, 255]");
    }
    if (!(spec.cell_threshold < spec.air_threshold)) {
      throw std::invalid_argument("cell threshold must be below the air threshold");
    }
    return spec;
  }
  const auto [low, high] = MultiOtsuThresholds(GrayHistogram(image));
  ThresholdSpec resolved;
  resolved.mode = ThresholdSpec::Mode::kFixed;
  resolved.cell_threshold = low + 1;  // g < low + 1  <=>  g <= low
  resolved.air_threshold = high;
  return resolved;
}

core::LabelGrid extract_air_cells(const core::RgbImage& image, const core::LabelGrid& base,
                                  const ThresholdSpec& thresholds) {
  if (image.width() != base.width() || image.height() != base.height()) {
    throw std::invalid_argument("image and mask dimensions differ");
  }
  const ThresholdSpec t = ResolveThresholds(image, thresholds);
  core::LabelGrid out = base;
  out.set_resolution(core::Resolution::kPolygonsAirCells);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const int g = image.Gray(x, y);
      if (g > t.air_threshold) {
        out.set(x, y, core::ClassId::kAir);
      } else if (g < t.cell_threshold) {
        out.set(x, y, core::ClassId::kCell);
      }
    }
  }
  return out;
}

}  // namespace histosynth::mask
