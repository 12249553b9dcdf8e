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
#include "histosynth/corpus/pseudo_histology.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "histosynth/core/png_io.h"
#include "histosynth/core/tps.h"

namespace histosynth::corpus {
namespace {

struct Stain {
  std::array<double, 3> base;
  std::array<double, 3> cell;
  double spacing;  // mean distance between cell centres
  double radius;
};

// Indexed by base class id.
constexpr std::array<Stain, core::kNumBaseClasses> kStains = {{
    {{225, 205, 212}, {120, 105, 150}, 13.0, 1.6},  // OTHER: stroma, sparse nuclei
    {{205, 170, 140}, {140, 85, 45}, 6.0, 2.2},     // PDL1_POS: brown membranes
    {{205, 195, 215}, {95, 95, 160}, 6.5, 2.0},     // PDL1_NEG: blue nuclei
    {{200, 190, 210}, {60, 60, 120}, 4.5, 1.3},     // INFLAMMATION: small dense nuclei
}};

constexpr std::array<double, 3> kAir = {246, 244, 246};

std::uint8_t ToByte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

core::RgbImage RenderTissue(const core::LabelGrid& mask, std::uint64_t seed) {
  const int w = mask.width();
  const int h = mask.height();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> grain(0.0, 5.0);

  // Per-tile stain strength.
  std::array<double, 3> tint{};
  for (double& t : tint) t = 0.94 + 0.12 * unit(rng);

  std::vector<std::array<double, 3>> rgb(static_cast<std::size_t>(w) * h);
  std::vector<int> base(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int c = static_cast<int>(mask.at(x, y));
      if (c >= core::kNumBaseClasses) c = 0;
      base[static_cast<std::size_t>(y) * w + x] = c;
      rgb[static_cast<std::size_t>(y) * w + x] = kStains[static_cast<std::size_t>(c)].base;
    }
  }

  // Air holes in non-tumor tissue: super-level set of a few random bumps.
  const int n_holes = static_cast<int>(unit(rng) * 4.0);
  for (int k = 0; k < n_holes; ++k) {
    const double cx = unit(rng) * w;
    const double cy = unit(rng) * h;
    const double rx = 3.0 + unit(rng) * 7.0;
    const double ry = 2.0 + unit(rng) * 5.0;
    for (int y = std::max(0, static_cast<int>(cy - ry)); y < std::min(h, static_cast<int>(cy + ry) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(cx - rx)); x < std::min(w, static_cast<int>(cx + rx) + 1); ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (dx * dx + dy * dy <= 1.0 && base[i] == 0) {
          rgb[i] = kAir;
          base[i] = -1;
        }
      }
    }
  }

  // Cells: a dense candidate process thinned per class to its own density.
  const double min_spacing = 4.5;
  const auto n_candidates = static_cast<int>(w * h / (min_spacing * min_spacing));
  for (int k = 0; k < n_candidates; ++k) {
    const double cx = unit(rng) * w;
    const double cy = unit(rng) * h;
    const double keep = unit(rng);
    const double rscale = 0.8 + 0.4 * unit(rng);
    const int ix = std::min(w - 1, static_cast<int>(cx));
    const int iy = std::min(h - 1, static_cast<int>(cy));
    const int cls = base[static_cast<std::size_t>(iy) * w + ix];
    if (cls < 0) continue;
    const Stain& s = kStains[static_cast<std::size_t>(cls)];
    const double ratio = min_spacing / s.spacing;
    if (keep >= ratio * ratio) continue;
    const double r = s.radius * rscale;
    for (int y = std::max(0, static_cast<int>(cy - r - 1)); y < std::min(h, static_cast<int>(cy + r) + 2); ++y) {
      for (int x = std::max(0, static_cast<int>(cx - r - 1)); x < std::min(w, static_cast<int>(cx + r) + 2); ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (base[i] != cls) continue;
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) rgb[i][c] = (1.0 - cover) * rgb[i][c] + cover * s.cell[c];
      }
    }
  }

  core::RgbImage image(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& p = rgb[static_cast<std::size_t>(y) * w + x];
      image.set(x, y, {ToByte(p[0] * tint[0] + grain(rng)), ToByte(p[1] * tint[1] + grain(rng)),
                       ToByte(p[2] * tint[2] + grain(rng))});
    }
  }
  return image;
}

double SampleTps(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  if (u < 0.25) return 0.0;
  if (u < 0.60) return 1.0;
  return unit(rng);
}

mask::MaskLayout SampleLayout(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  mask::MaskLayout layout;
  layout.n_regions = 3 + static_cast<int>(unit(rng) * 5.0);
  layout.region_scale = 0.15 + 0.15 * unit(rng);
  layout.inflammation_fraction = 0.05 + 0.2 * unit(rng);
  layout.other_fraction = 0.25 + 0.3 * unit(rng);
  return layout;
}

std::vector<core::PairedSample> GenerateCorpus(const CorpusOptions& options) {
  if (options.count <= 0) throw std::invalid_argument("corpus size must be positive");
  std::mt19937_64 rng(options.seed);
  std::vector<core::PairedSample> out;
  out.reserve(static_cast<std::size_t>(options.count));
  for (int i = 0; i < options.count; ++i) {
    const double tps = SampleTps(rng);
    const mask::MaskLayout layout = SampleLayout(rng);
    const std::uint64_t mask_seed = rng();
    const std::uint64_t image_seed = rng();
    core::PairedSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "tile_%04d", i);
    s.id = id;
    s.mask = mask::synthesize_mask(tps, layout, options.width, options.height, mask_seed);
    s.image = RenderTissue(s.mask, image_seed);
    out.push_back(std::move(s));
  }
  return out;
}

core::DatasetManifest WriteCorpus(const std::filesystem::path& dir,
                                  const std::vector<core::PairedSample>& samples, core::Split split) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  core::DatasetManifest manifest;
  for (const core::PairedSample& s : samples) {
    core::ManifestEntry e;
    e.image = dir / "images" / (s.id + ".png");
    e.mask = dir / "masks" / (s.id + ".png");
    e.split = split;
    e.tps = core::compute_tps(s.mask);
    core::WriteRgbPng(e.image, s.image);
    core::WriteMaskPng(e.mask, s.mask);
    manifest.entries.push_back(std::move(e));
  }
  core::SaveManifest(dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace histosynth::corpus
