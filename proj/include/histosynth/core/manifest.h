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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "histosynth/core/label_grid.h"

namespace histosynth::core {

enum class Split { kTrain, kTest };

std::string_view SplitName(Split s);
std::optional<Split> ParseSplit(std::string_view name);

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path mask;
  Split split = Split::kTrain;
  double tps = 0.0;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;

  std::vector<ManifestEntry> WithSplit(Split s) const;
};

/// Reads a JSON-lines manifest ({image, mask, split, tps} per line). Relative
/// paths are resolved against the manifest's directory. With check_files set,
/// a missing image or mask is an error.
DatasetManifest LoadManifest(const std::filesystem::path& path, bool check_files = true);

/// Paths below the manifest's directory are written relative to it.
void SaveManifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Seeded train/test split. With stratification, every TPS band is shuffled and
/// split on its own, so each band's train share is within one item of
/// train_fraction. Both halves are non-empty.
std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_fraction,
                                                          bool stratify_by_tps_class,
                                                          std::uint64_t seed);

/// A mask/image pair held in memory.
struct PairedSample {
  std::string id;
  LabelGrid mask;
  RgbImage image;
};

/// Loads every entry (or only one split) from disk and checks that the image
/// and mask dimensions agree.
std::vector<PairedSample> LoadPairs(const DatasetManifest& manifest,
                                    std::optional<Split> only = std::nullopt);

}  // namespace histosynth::core
