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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace histosynth::core {

/// Pixel class. The numeric value is the palette index used on disk and the
/// channel index of the one-hot encoding, so it must never be reordered.
enum class ClassId : std::uint8_t {
  kOther = 0,
  kPdl1Pos = 1,
  kPdl1Neg = 2,
  kInflammation = 3,
  kNoise = 4,
  kAir = 5,
  kCell = 6,
};

inline constexpr int kNumBaseClasses = 4;
inline constexpr int kNumLabels = 7;

inline constexpr bool IsAuxiliary(ClassId id) {
  return static_cast<int>(id) >= kNumBaseClasses;
}

std::string_view ClassName(ClassId id);
/// Accepts the canonical upper-case names ("PDL1_POS", ...) case-insensitively.
std::optional<ClassId> ParseClassName(std::string_view name);
std::optional<ClassId> ClassFromIndex(int index);

enum class Resolution : std::uint8_t {
  kPolygons,
  kPolygonsNoise,
  kPolygonsAirCells,
};

std::string_view ResolutionName(Resolution r);
/// Case-insensitive inverse of ResolutionName.
std::optional<Resolution> ParseResolution(std::string_view name);

/// Row-major grid of class ids, the semantic mask at any of the three
/// resolutions.
class LabelGrid {
 public:
  LabelGrid() = default;
  LabelGrid(int width, int height, ClassId fill = ClassId::kOther,
            Resolution tag = Resolution::kPolygons);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  Resolution resolution() const { return resolution_; }
  void set_resolution(Resolution r) { resolution_ = r; }

  ClassId at(int x, int y) const { return labels_[Index(x, y)]; }
  void set(int x, int y, ClassId id) { labels_[Index(x, y)] = id; }

  const std::vector<ClassId>& labels() const { return labels_; }
  std::vector<ClassId>& labels() { return labels_; }

  bool HasAuxiliaryLabels() const;

  /// Throws std::invalid_argument when width*height disagrees with the label
  /// count or a POLYGONS grid carries auxiliary labels.
  void Validate() const;

  bool operator==(const LabelGrid& other) const = default;

 private:
  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  Resolution resolution_ = Resolution::kPolygons;
  std::vector<ClassId> labels_;
};

/// Interleaved 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y, int channel) const {
    return data_[Offset(x, y) + static_cast<std::size_t>(channel)];
  }
  void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    const std::size_t o = Offset(x, y);
    data_[o] = rgb[0];
    data_[o + 1] = rgb[1];
    data_[o + 2] = rgb[2];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  /// Grayscale level round(0.299 R + 0.587 G + 0.114 B).
  std::uint8_t Gray(int x, int y) const;

  bool operator==(const RgbImage& other) const = default;

 private:
  std::size_t Offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Nearest-neighbour upscaling by an integer factor.
LabelGrid UpscaleNearest(const LabelGrid& grid, int factor);

}  // namespace histosynth::core
