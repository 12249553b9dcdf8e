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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "histosynth/core/manifest.h"
#include "histosynth/gan/config.h"
#include "histosynth/mask/air_cells.h"
#include "histosynth/similarity/embedder.h"

namespace histosynth::similarity {

struct SweepConfig {
  gan::GeneratorConfig generator = gan::GeneratorConfig::Desk();
  gan::DiscriminatorConfig discriminator;
  gan::TrainConfig train;
  std::int64_t steps_per_model = 1000;
  std::uint64_t noise_seed = 0;
  /// Adds a run on plain polygon masks (no noise).
  bool include_polygons_baseline = true;
  /// Adds a run on polygon masks overlaid with thresholded air and cells.
  bool include_air_cells = false;
  mask::ThresholdSpec air_cells;
  /// Trains the runs concurrently; the report order is unaffected.
  bool parallel = false;
  int embed_threads = 1;
  /// Per-run checkpoints and loss logs go to out_dir/runs/<label>/.
  std::optional<std::filesystem::path> out_dir;
  /// Writes this many synthesized eval images per run to
  /// out_dir/runs/<label>/images/.
  int save_images = 0;
};

struct SweepData {
  std::span<const core::PairedSample> train;
  /// Held-out pairs: their masks drive synthesis, their images are the target set.
  std::span<const core::PairedSample> eval;
  /// Independent real images scored against the eval images as a reference.
  std::span<const core::RgbImage> control_real;
};

struct SweepRun {
  std::string label;
  core::Resolution resolution = core::Resolution::kPolygons;
  std::optional<double> mean_distance;
  std::map<std::string, double> fd;
  std::optional<std::string> error;
  std::optional<std::filesystem::path> checkpoint;
  std::int64_t steps = 0;
  double seconds = 0.0;
};

struct SweepReport {
  std::vector<SweepRun> runs;
  std::string primary_embedder;
  /// Mean distance of the noise run with the lowest primary FD.
  std::optional<double> optimum;
  std::map<std::string, double> reference_fd;
  /// Per embedder: polygons-baseline FD divided by the best noise-run FD.
  std::map<std::string, double> baseline_to_best_ratio;
  /// Fraction of (noise run, embedder) pairs scoring below the baseline.
  std::optional<double> improvement_share;
  nlohmann::json environment;
};

/// Masks with noise injected at the given mean distance; sample i uses a seed
/// derived from (seed, i).
std::vector<core::PairedSample> WithNoise(std::span<const core::PairedSample> samples, double mean_distance,
                                          std::uint64_t seed);

/// Masks overlaid with air and cell labels thresholded from their images.
std::vector<core::PairedSample> WithAirCells(std::span<const core::PairedSample> samples,
                                             const mask::ThresholdSpec& spec);

/// Trains one GAN per mean distance (plus the optional baselines), scores
/// each against the eval images with every embedder, and reports the argmin
/// under embedders[0]. A failing run is recorded and the sweep goes on.
SweepReport noise_frequency_sweep(std::span<const double> frequencies, const SweepData& data,
                                  const SweepConfig& config, std::span<const FeatureEmbedder* const> embedders);

nlohmann::json SweepReportToJson(const SweepReport& report);

}  // namespace histosynth::similarity
