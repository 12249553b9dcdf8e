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
#include "histosynth/mask/synthesize.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "histosynth/core/tps.h"

namespace histosynth::mask {
namespace {

/// Sum of randomly placed isotropic bumps plus a tiny tie-breaking jitter.
std::vector<double> BlobField(int width, int height, int n_bumps, double radius,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, width);
  std::uniform_real_distribution<double> uy(0.0, height);
  std::uniform_real_distribution<double> scale(0.6, 1.4);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  std::uniform_real_distribution<double> jitter(0.0, 1e-9);
  struct Bump {
    double cx, cy, inv_two_sigma2, amplitude;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < n_bumps; ++k) {
    const double sigma = std::max(1.0, radius * scale(rng));
    bumps.push_back({ux(rng), uy(rng), 1.0 / (2.0 * sigma * sigma), amp(rng)});
  }
  std::vector<double> field(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (const Bump& b : bumps) {
        const double dx = x + 0.5 - b.cx;
        const double dy = y + 0.5 - b.cy;
        v += b.amplitude * std::exp(-(dx * dx + dy * dy) * b.inv_two_sigma2);
      }
      field[static_cast<std::size_t>(y) * width + x] = v + jitter(rng);
    }
  }
  return field;
}

/// Count of selected entries whose value is at least level.
std::size_t CountAtLeast(const std::vector<double>& values, const std::vector<std::size_t>& idx,
                         double level) {
  return static_cast<std::size_t>(std::count_if(
      idx.begin(), idx.end(), [&](std::size_t i) { return values[i] >= level; }));
}

/// Bisects a level so that roughly share * |idx| entries are at or above it.
double LevelForShare(const std::vector<double>& values, const std::vector<std::size_t>& idx,
                     double share, double tolerance, int max_iterations) {
  double lo = values[idx.front()];
  double hi = lo;
  for (std::size_t i : idx) {
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  hi = std::nextafter(hi, hi + 1.0);
  const double n = static_cast<double>(idx.size());
  double level = 0.5 * (lo + hi);
  for (int it = 0; it < max_iterations; ++it) {
    level = 0.5 * (lo + hi);
    const double achieved = static_cast<double>(CountAtLeast(values, idx, level)) / n;
    if (std::abs(achieved - share) <= tolerance) break;
    if (achieved > share) {
      lo = level;
    } else {
      hi = level;
    }
  }
  return level;
}

}  // namespace

core::LabelGrid synthesize_mask(double target_tps, const MaskLayout& layout, int width, int height,
                                std::uint64_t seed, const SynthesisOptions& options) {
  using core::ClassId;
  if (width <= 0 || height <= 0) throw std::invalid_argument("dimensions must be positive");
  if (!(target_tps >= 0.0 && target_tps <= 1.0)) {
    throw std::invalid_argument("target TPS must lie in [0, 1]");
  }
  const double infl = layout.inflammation_fraction;
  const double other = layout.other_fraction;
  if (!(infl >= 0.0 && infl <= 1.0 && other >= 0.0 && other <= 1.0)) {
    throw std::invalid_argument("layout fractions must lie in [0, 1]");
  }
  if (infl + other > 1.0 + 1e-12) {
    throw std::invalid_argument("inflammation and other fractions exceed the image area");
  }
  if (layout.n_regions < 1 || !(layout.region_scale > 0.0)) {
    throw std::invalid_argument("layout needs at least one region of positive scale");
  }
  const double tumor_share = std::max(0.0, 1.0 - infl - other);
  const double n_pixels = static_cast<double>(width) * height;
  const double tumor_pixels = tumor_share * n_pixels;
  if (target_tps > 0.0 && tumor_pixels < 1.0) {
    throw std::invalid_argument("layout leaves no tumor area for a positive TPS target");
  }
  if (target_tps > 0.0 && target_tps < 1.0 && tumor_pixels * options.tolerance < 1.0) {
    throw std::invalid_argument("tumor area is too small to resolve the TPS tolerance");
  }

  std::mt19937_64 rng(seed);
  const double radius = layout.region_scale * std::min(width, height);
  const std::vector<double> tissue = BlobField(width, height, layout.n_regions, radius, rng);
  const std::vector<double> inflammation = BlobField(width, height, layout.n_regions, radius, rng);
  const std::vector<double> positivity =
      BlobField(width, height, std::max(1, layout.n_regions / 2), radius, rng);

  core::LabelGrid out(width, height, ClassId::kOther, core::Resolution::kPolygons);
  auto& labels = out.labels();
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  // Tumor occupies the highest tissue-field values.
  std::vector<std::size_t> tumor;
  std::vector<std::size_t> rest;
  if (tumor_share >= 1.0) {
    tumor = all;
  } else if (tumor_share > 0.0) {
    const double level = LevelForShare(tissue, all, tumor_share, 0.5 / n_pixels, 64);
    for (std::size_t i : all) (tissue[i] >= level ? tumor : rest).push_back(i);
  } else {
    rest = all;
  }
  if (tumor.empty() && target_tps > 0.0) {
    throw std::invalid_argument("layout produced no tumor pixels for a positive TPS target");
  }

  // Inflammation takes its share of the image from the non-tumor area.
  if (!rest.empty() && infl > 0.0) {
    const double share = std::min(1.0, infl * n_pixels / static_cast<double>(rest.size()));
    const double level = LevelForShare(inflammation, rest, share, 0.5 / n_pixels, 64);
    for (std::size_t i : rest) {
      if (inflammation[i] >= level) labels[i] = ClassId::kInflammation;
    }
  }

  if (!tumor.empty()) {
    for (std::size_t i : tumor) labels[i] = ClassId::kPdl1Neg;
    if (target_tps >= 1.0) {
      for (std::size_t i : tumor) labels[i] = ClassId::kPdl1Pos;
    } else if (target_tps > 0.0) {
      // Rebalance: the positive region is the super-level set of the
      // positivity field; its level is moved until the TPS is on target.
      const double level = LevelForShare(positivity, tumor, target_tps, 0.25 * options.tolerance,
                                         options.max_iterations);
      for (std::size_t i : tumor) {
        if (positivity[i] >= level) labels[i] = ClassId::kPdl1Pos;
      }
    }
  }

  const double achieved = core::compute_tps(out);
  if (!tumor.empty() && std::abs(achieved - target_tps) > options.tolerance) {
    throw std::runtime_error("TPS rebalancing did not converge within the iteration cap");
  }
  return out;
}

}  // namespace histosynth::mask
