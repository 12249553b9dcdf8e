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
#include "histosynth/gan/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "histosynth/gan/losses.h"
#include "histosynth/mask/one_hot.h"

namespace histosynth::gan {
namespace fs = std::filesystem;

std::vector<TrainingPair> PrepareTrainingPairs(std::span<const core::PairedSample> samples,
                                               int n_labels) {
  std::vector<TrainingPair> out;
  out.reserve(samples.size());
  for (const core::PairedSample& s : samples) {
    if (s.mask.width() != s.image.width() || s.mask.height() != s.image.height()) {
      throw std::invalid_argument("image/mask size mismatch for " + s.id);
    }
    out.push_back({mask::one_hot_encode(s.mask, n_labels), ToModelSpace(s.image)});
  }
  return out;
}

std::string FormatLossRecord(const LossRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g,%.9g,%.9g", r.epoch,
                static_cast<long long>(r.step), r.d_loss_real, r.d_loss_fake, r.g_adv, r.g_fm, r.lr);
  return buf;
}

std::vector<LossRecord> ReadLossLog(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open loss log " + path.string());
  std::vector<LossRecord> out;
  std::string line;
  std::getline(in, line);
  if (line != kLossLogHeader) throw std::runtime_error("unexpected loss log header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossRecord r;
    long long step = 0;
    if (std::sscanf(line.c_str(), "%d,%lld,%lf,%lf,%lf,%lf,%lf", &r.epoch, &step, &r.d_loss_real,
                    &r.d_loss_fake, &r.g_adv, &r.g_fm, &r.lr) != 7) {
      throw std::runtime_error("malformed loss log line: " + line);
    }
    r.step = step;
    out.push_back(r);
  }
  return out;
}

LossRecord TrainStep(GanModel& model, const TrainingPair& pair, double lr) {
  auto& G = model.generator();
  auto& D = model.discriminator();
  const TrainConfig& cfg = model.train_config();
  const Criterion d_crit = DiscriminatorCriterion(cfg.loss_mode);
  const Criterion g_crit = GeneratorCriterion(cfg.loss_mode);
  const auto g_params = model.GeneratorParameters();
  const auto d_params = model.DiscriminatorParameters();
  nn::ZeroGrad(g_params);
  nn::ZeroGrad(d_params);

  LossRecord rec;
  rec.lr = lr;
  const nn::Tensor<float> fake = G.Forward(pair.labels);

  // Real pass: discriminator loss and the feature-matching targets.
  D.SetParamGradEnabled(true);
  const DiscriminatorOutput<float> real_out = D.Forward(nn::Concat(pair.labels, pair.image));
  std::vector<nn::Tensor<float>> grad_scores;
  rec.d_loss_real = AdversarialLoss(real_out.scores, Target::kReal, d_crit, &grad_scores);
  D.Backward(grad_scores, {});

  // Fake pass, shared by both players.
  const DiscriminatorOutput<float> fake_out = D.Forward(nn::Concat(pair.labels, fake));
  rec.d_loss_fake = AdversarialLoss(fake_out.scores, Target::kFake, d_crit, &grad_scores);
  D.Backward(grad_scores, {});

  D.SetParamGradEnabled(false);
  std::vector<nn::Tensor<float>> g_scores;
  std::vector<std::vector<nn::Tensor<float>>> g_features;
  rec.g_adv = AdversarialLoss(fake_out.scores, Target::kReal, g_crit, &g_scores);
  rec.g_fm = FeatureMatchingLoss(real_out.features, fake_out.features, 1.0, &g_features);
  if (cfg.lambda_fm != 1.0) {
    for (auto& scale : g_features) {
      for (auto& t : scale) {
        for (float& v : t.data) v *= static_cast<float>(cfg.lambda_fm);
      }
    }
  }
  const nn::Tensor<float> grad_input = D.Backward(g_scores, g_features);
  D.SetParamGradEnabled(true);
  G.Backward(nn::SliceChannels(grad_input, pair.labels.channels, fake.channels));

  model.generator_optimizer().Step(lr);
  model.discriminator_optimizer().Step(lr);
  return rec;
}

std::vector<std::size_t> EpochOrder(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainResult train(GanModel& model, std::span<const TrainingPair> data, const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("training needs at least one pair");
  const TrainConfig& cfg = model.train_config();
  const int end_epoch = options.end_epoch.value_or(cfg.total_epochs());
  if (end_epoch > cfg.total_epochs()) {
    throw std::out_of_range("end_epoch lies beyond the learning-rate schedule");
  }

  std::optional<fs::path> ckpt_dir;
  std::ofstream log_file;
  if (options.out_dir) {
    ckpt_dir = *options.out_dir / "checkpoints";
    fs::create_directories(*ckpt_dir);
    fs::create_directories(*options.out_dir / "reports");
    const fs::path log_path = *options.out_dir / "reports" / "loss_log.csv";
    const bool fresh = !fs::exists(log_path) || model.global_step == 0;
    log_file.open(log_path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) log_file << kLossLogHeader << '\n';
  }

  TrainResult result;
  std::string last_good = SerializeCheckpoint(model);
  const auto checkpoint = [&](bool epoch_boundary) {
    last_good = SerializeCheckpoint(model);
    if (!ckpt_dir) return;
    const fs::path latest = *ckpt_dir / "latest.ckpt";
    SaveCheckpoint(model, latest);
    result.last_checkpoint = latest;
    if (epoch_boundary && options.keep_epoch_checkpoints) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", model.epoch);
      SaveCheckpoint(model, *ckpt_dir / name);
    }
  };

  std::int64_t steps_this_call = 0;
  const auto budget_left = [&] {
    return !options.max_steps || steps_this_call < *options.max_steps;
  };
  while (model.epoch < end_epoch && budget_left()) {
    const double lr = lr_at_epoch(cfg, model.epoch);
    const auto order = EpochOrder(cfg.seed, model.epoch, data.size());
    while (static_cast<std::size_t>(model.step_in_epoch) < order.size() && budget_left()) {
      const TrainingPair& pair = data[order[static_cast<std::size_t>(model.step_in_epoch)]];
      LossRecord rec = TrainStep(model, pair, lr);
      rec.epoch = model.epoch;
      rec.step = model.global_step;
      if (!std::isfinite(rec.d_loss_real) || !std::isfinite(rec.d_loss_fake) ||
          !std::isfinite(rec.g_adv) || !std::isfinite(rec.g_fm)) {
        RestoreCheckpoint(model, last_good);
        throw TrainingDivergedError("non-finite loss at step " + std::to_string(rec.step) +
                                        "; model restored to the last good state",
                                    result.last_checkpoint);
      }
      ++model.step_in_epoch;
      ++model.global_step;
      ++steps_this_call;
      result.log.push_back(rec);
      if (log_file.is_open()) log_file << FormatLossRecord(rec) << '\n';
      if (options.on_step) options.on_step(rec);
    }
    if (static_cast<std::size_t>(model.step_in_epoch) >= order.size()) {
      ++model.epoch;
      model.step_in_epoch = 0;
      checkpoint(true);
    }
  }
  if (model.step_in_epoch != 0) checkpoint(false);
  return result;
}

}  // namespace histosynth::gan
