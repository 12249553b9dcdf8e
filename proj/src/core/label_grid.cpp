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
#include "histosynth/core/label_grid.h"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace histosynth::core {
namespace {

constexpr std::array<std::string_view, kNumLabels> kClassNames = {
    "OTHER", "PDL1_POS", "PDL1_NEG", "INFLAMMATION", "NOISE", "AIR", "CELL"};

}  // namespace

std::string_view ClassName(ClassId id) {
  return kClassNames[static_cast<std::size_t>(id)];
}

std::optional<ClassId> ParseClassName(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (int i = 0; i < kNumLabels; ++i) {
    if (kClassNames[static_cast<std::size_t>(i)] == upper) {
      return static_cast<ClassId>(i);
    }
  }
  return std::nullopt;
}

std::optional<ClassId> ClassFromIndex(int index) {
  if (index < 0 || index >= kNumLabels) return std::nullopt;
  return static_cast<ClassId>(index);
}

std::string_view ResolutionName(Resolution r) {
  switch (r) {
    case Resolution::kPolygons:
      return "POLYGONS";
    case Resolution::kPolygonsNoise:
      return "POLYGONS_NOISE";
    case Resolution::kPolygonsAirCells:
      return "POLYGONS_AIR_CELLS";
  }
  return "UNKNOWN";
}

std::optional<Resolution> ParseResolution(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Resolution r : {Resolution::kPolygons, Resolution::kPolygonsNoise, Resolution::kPolygonsAirCells}) {
    if (ResolutionName(r) == upper) return r;
  }
  return std::nullopt;
}

LabelGrid::LabelGrid(int width, int height, ClassId fill, Resolution tag)
    : width_(width), height_(height), resolution_(tag) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("LabelGrid dimensions must be positive");
  }
  labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

bool LabelGrid::HasAuxiliaryLabels() const {
  return std::any_of(labels_.begin(), labels_.end(),
                     [](ClassId id) { return IsAuxiliary(id); });
}

void LabelGrid::Validate() const {
  if (static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) !=
      labels_.size()) {
    throw std::invalid_argument("LabelGrid label count does not match width*height");
  }
  for (ClassId id : labels_) {
    if (static_cast<int>(id) >= kNumLabels) {
      throw std::invalid_argument("LabelGrid holds an unknown class id");
    }
  }
  if (resolution_ == Resolution::kPolygons && HasAuxiliaryLabels()) {
    throw std::invalid_argument("POLYGONS mask must not contain auxiliary labels");
  }
}

RgbImage::RgbImage(int width, int height, std::array<std::uint8_t, 3> fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("RgbImage dimensions must be positive");
  }
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

std::uint8_t RgbImage::Gray(int x, int y) const {
  const double g = 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
  return static_cast<std::uint8_t>(std::clamp(std::lround(g), 0L, 255L));
}

LabelGrid UpscaleNearest(const LabelGrid& grid, int factor) {
  if (factor < 1) throw std::invalid_argument("upscale factor must be >= 1");
  LabelGrid out(grid.width() * factor, grid.height() * factor, ClassId::kOther,
                grid.resolution());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, grid.at(x / factor, y / factor));
    }
  }
  return out;
}

}  // namespace histosynth::core
