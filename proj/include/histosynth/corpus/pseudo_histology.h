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
#include <filesystem>
#include <random>
#include <vector>

#include "histosynth/core/label_grid.h"
#include "histosynth/core/manifest.h"
#include "histosynth/mask/synthesize.h"

namespace histosynth::corpus {

/// Procedural stand-in for IHC-stained tiles. Each tissue class has a stain
/// tint and a population of randomly placed cells, so the image carries
/// cell-level detail that a region-level mask does not describe.
core::RgbImage RenderTissue(const core::LabelGrid& mask, std::uint64_t seed);

/// Bimodal TPS draw: a quarter of tiles at 0, a third at 1, the rest spread
/// over (0, 1).
double SampleTps(std::mt19937_64& rng);

/// Layout with randomised class shares around the defaults.
mask::MaskLayout SampleLayout(std::mt19937_64& rng);

struct CorpusOptions {
  int count = 200;
  int width = 128;
  int height = 64;
  std::uint64_t seed = 0;
};

/// Paired masks (POLYGONS resolution) and rendered images; deterministic in
/// options.seed. Sample ids are "tile_0000", "tile_0001", ...
std::vector<core::PairedSample> GenerateCorpus(const CorpusOptions& options);

/// Writes images/<id>.png, masks/<id>.png and manifest.jsonl under dir, all
/// entries tagged with the given split. Returns the manifest.
core::DatasetManifest WriteCorpus(const std::filesystem::path& dir,
                                  const std::vector<core::PairedSample>& samples,
                                  core::Split split = core::Split::kTrain);

}  // namespace histosynth::corpus
