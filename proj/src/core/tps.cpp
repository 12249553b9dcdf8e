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
#include "histosynth/core/tps.h"

#include <cmath>
#include <stdexcept>

namespace histosynth::core {

ClassHistogram class_histogram(const LabelGrid& mask) {
  ClassHistogram counts{};
  for (ClassId id : mask.labels()) {
    ++counts[static_cast<std::size_t>(id)];
  }
  return counts;
}

double compute_tps(const LabelGrid& mask) {
  const ClassHistogram h = class_histogram(mask);
  const auto pos = h[static_cast<std::size_t>(ClassId::kPdl1Pos)];
  const auto neg = h[static_cast<std::size_t>(ClassId::kPdl1Neg)];
  if (pos + neg == 0) return 0.0;
  return static_cast<double>(pos) / static_cast<double>(pos + neg);
}

TpsClass tps_class(double tps) {
  if (!std::isfinite(tps) || tps < 0.0 || tps > 1.0) {
    throw std::out_of_range("TPS must lie in [0, 1]");
  }
  if (tps < 0.01) return TpsClass::kLow;
  if (tps < 0.5) return TpsClass::kMid;
  return TpsClass::kHigh;
}

std::string_view TpsClassName(TpsClass c) {
  switch (c) {
    case TpsClass::kLow:
      return "LOW";
    case TpsClass::kMid:
      return "MID";
    case TpsClass::kHigh:
      return "HIGH";
  }
  return "UNKNOWN";
}

}  // namespace histosynth::core
