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

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "histosynth/core/label_grid.h"

namespace histosynth::mask {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Region-level annotation of one base tissue class. The ring is implicitly
/// closed.
struct PolygonAnnotation {
  core::ClassId class_id = core::ClassId::kOther;
  std::vector<Point> vertices;
};

/// Raised for annotations that cannot be rasterized. index() identifies the
/// offending entry of the input list.
class DegeneratePolygonError : public std::invalid_argument {
 public:
  DegeneratePolygonError(std::size_t index, const std::string& reason);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Signed shoelace area (positive for counter-clockwise in y-up coordinates).
double SignedArea(std::span<const Point> ring);

/// True when two non-adjacent edges of the closed ring cross or touch.
bool IsSelfIntersecting(std::span<const Point> ring);

/// Pixel (x, y) is covered when its centre (x + 0.5, y + 0.5) is inside the
/// polygon under the half-open crossing rule: left and top edges are inside,
/// right and bottom edges are outside. Later annotations overwrite earlier
/// ones. Pixels outside all polygons get the background class.
core::LabelGrid rasterize_polygons(std::span<const PolygonAnnotation> annotations, int width,
                                   int height, core::ClassId background = core::ClassId::kOther);

/// JSON list of {"class": "PDL1_POS", "points": [[x, y], ...]}.
std::vector<PolygonAnnotation> LoadPolygonsJson(const std::filesystem::path& path);
std::vector<PolygonAnnotation> ParsePolygonsJson(const std::string& text);

}  // namespace histosynth::mask
