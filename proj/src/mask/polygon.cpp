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
#include "histosynth/mask/polygon.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace histosynth::mask {
namespace {

double Cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int Sign(double v) { return (v > 0.0) - (v < 0.0); }

bool OnSegment(const Point& p, const Point& a, const Point& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool SegmentsIntersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = Sign(Cross(q1, q2, p1));
  const int d2 = Sign(Cross(q1, q2, p2));
  const int d3 = Sign(Cross(p1, p2, q1));
  const int d4 = Sign(Cross(p1, p2, q2));
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  if (d1 == 0 && OnSegment(p1, q1, q2)) return true;
  if (d2 == 0 && OnSegment(p2, q1, q2)) return true;
  if (d3 == 0 && OnSegment(q1, p1, p2)) return true;
  if (d4 == 0 && OnSegment(q2, p1, p2)) return true;
  return false;
}

void CheckAnnotation(const PolygonAnnotation& a, std::size_t index) {
  if (a.vertices.size() < 3) {
    throw DegeneratePolygonError(index, "fewer than 3 vertices");
  }
  if (core::IsAuxiliary(a.class_id)) {
    throw DegeneratePolygonError(index, "annotations must use a base tissue class");
  }
  for (const Point& p : a.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DegeneratePolygonError(index, "non-finite vertex");
    }
  }
  if (std::abs(SignedArea(a.vertices)) < 1e-9) {
    throw DegeneratePolygonError(index, "zero area (collinear vertices)");
  }
  if (IsSelfIntersecting(a.vertices)) {
    throw DegeneratePolygonError(index, "self-intersecting ring");
  }
}

}  // namespace

DegeneratePolygonError::DegeneratePolygonError(std::size_t index, const std::string& reason)
    : std::invalid_argument("polygon annotation #" + std::to_string(index) + ": " + reason),
      index_(index) {}

double SignedArea(std::span<const Point> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % ring.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

bool IsSelfIntersecting(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Edges sharing a vertex are adjacent.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (SegmentsIntersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) {
        return true;
      }
    }
  }
  return false;
}

core::LabelGrid rasterize_polygons(std::span<const PolygonAnnotation> annotations, int width,
                                   int height, core::ClassId background) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  if (core::IsAuxiliary(background)) {
    throw std::invalid_argument("background must be a base tissue class");
  }
  for (std::size_t i = 0; i < annotations.size(); ++i) CheckAnnotation(annotations[i], i);

  core::LabelGrid grid(width, height, background, core::Resolution::kPolygons);
  std::vector<double> crossings;
  for (const PolygonAnnotation& a : annotations) {
    const auto& v = a.vertices;
    double min_y = v[0].y;
    double max_y = v[0].y;
    for (const Point& p : v) {
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const int y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y_end = std::min(height, static_cast<int>(std::ceil(max_y + 0.5)));
    for (int y = y_begin; y < y_end; ++y) {
      const double yc = y + 0.5;
      crossings.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& p = v[i];
        const Point& q = v[(i + 1) % v.size()];
        if ((p.y <= yc) != (q.y <= yc)) {
          crossings.push_back(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
        }
      }
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        // Centres x + 0.5 in [left, right).
        const int x0 = std::max(0, static_cast<int>(std::ceil(crossings[k] - 0.5)));
        const int x1 = std::min(width, static_cast<int>(std::ceil(crossings[k + 1] - 0.5)));
        for (int x = x0; x < x1; ++x) grid.set(x, y, a.class_id);
      }
    }
  }
  return grid;
}

std::vector<PolygonAnnotation> ParsePolygonsJson(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.is_array()) throw std::invalid_argument("polygon file must hold a JSON list");
  std::vector<PolygonAnnotation> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    if (!item.contains("class") || !item.contains("points")) {
      throw DegeneratePolygonError(i, "expected fields 'class' and 'points'");
    }
    const auto id = core::ParseClassName(item.at("class").get<std::string>());
    if (!id) throw DegeneratePolygonError(i, "unknown class name");
    PolygonAnnotation a;
    a.class_id = *id;
    for (const auto& pt : item.at("points")) {
      if (!pt.is_array() || pt.size() != 2) {
        throw DegeneratePolygonError(i, "points must be [x, y] pairs");
      }
      a.vertices.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<PolygonAnnotation> LoadPolygonsJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePolygonsJson(buffer.str());
}

}  // namespace histosynth::mask
