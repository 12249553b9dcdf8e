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
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "histosynth/core/manifest.h"
#include "histosynth/gan/model.h"

namespace histosynth::gan {

/// Conditioning stack and target image in model space.
struct TrainingPair {
  nn::Tensor<float> labels;
  nn::Tensor<float> image;
};

std::vector<TrainingPair> PrepareTrainingPairs(std::span<const core::PairedSample> samples,
                                               int n_labels = core::kNumLabels);

/// One row of the loss log.
struct LossRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double d_loss_real = 0.0;
  double d_loss_fake = 0.0;
  double g_adv = 0.0;
  double g_fm = 0.0;
  double lr = 0.0;
};

inline constexpr const char* kLossLogHeader = "epoch,step,d_loss_real,d_loss_fake,g_adv,g_fm,lr";
std::string FormatLossRecord(const LossRecord& r);
std::vector<LossRecord> ReadLossLog(const std::filesystem::path& path);

struct TrainOptions {
  /// Receives checkpoints/ and reports/loss_log.csv when set.
  std::optional<std::filesystem::path> out_dir;
  /// Stop after this epoch (exclusive); defaults to the full schedule.
  std::optional<int> end_epoch;
  /// Stop after this many steps of this call.
  std::optional<std::int64_t> max_steps;
  bool keep_epoch_checkpoints = false;
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  std::vector<LossRecord> log;
  std::optional<std::filesystem::path> last_checkpoint;
};

/// Raised when a loss turns non-finite. The model has already been rolled
/// back to the last good state.
class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, std::optional<std::filesystem::path> checkpoint)
      : std::runtime_error(what), checkpoint_(std::move(checkpoint)) {}
  const std::optional<std::filesystem::path>& last_good_checkpoint() const { return checkpoint_; }

 private:
  std::optional<std::filesystem::path> checkpoint_;
};

/// One alternating update: discriminator on (real, detached fake) and
/// generator on adversarial + feature-matching loss, both evaluated against
/// the discriminator as it was before this step.
LossRecord TrainStep(GanModel& model, const TrainingPair& pair, double lr);

/// Sample order of one epoch; a pure function of (seed, epoch).
std::vector<std::size_t> EpochOrder(std::uint64_t seed, int epoch, std::size_t n);

/// Runs the schedule from the model's current position. Checkpoints are
/// written at every epoch boundary (and at the final step) when out_dir is
/// set.
TrainResult train(GanModel& model, std::span<const TrainingPair> data,
                  const TrainOptions& options = {});

}  // namespace histosynth::gan
