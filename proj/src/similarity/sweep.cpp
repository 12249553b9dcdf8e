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
#include "histosynth/similarity/sweep.h"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "histosynth/core/png_io.h"
#include "histosynth/gan/model.h"
#include "histosynth/gan/trainer.h"
#include "histosynth/mask/noise.h"
#include "histosynth/similarity/frechet.h"

namespace histosynth::similarity {
namespace {

std::uint64_t SampleSeed(std::uint64_t seed, std::size_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  return rng();
}

std::string FormatDistance(double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", d);
  return buf;
}

struct RunPlan {
  SweepRun run;
  std::vector<core::PairedSample> train;
  std::vector<core::PairedSample> eval;
};

void Execute(RunPlan& plan, const SweepConfig& config, std::span<const core::RgbImage> targets,
             std::span<const FeatureEmbedder* const> embedders) {
  const auto start = std::chrono::steady_clock::now();
  try {
    gan::GanModel model(config.generator, config.discriminator, config.train);
    const std::vector<gan::TrainingPair> pairs = gan::PrepareTrainingPairs(plan.train);
    gan::TrainOptions options;
    options.max_steps = config.steps_per_model;
    if (config.out_dir) options.out_dir = *config.out_dir / "runs" / plan.run.label;
    const gan::TrainResult result = gan::train(model, pairs, options);
    plan.run.steps = static_cast<std::int64_t>(result.log.size());
    plan.run.checkpoint = result.last_checkpoint;

    std::vector<core::RgbImage> synth;
    synth.reserve(plan.eval.size());
    for (const core::PairedSample& s : plan.eval) synth.push_back(gan::SynthesizeImage(model, s.mask));
    if (config.out_dir && config.save_images > 0) {
      const std::filesystem::path dir = *config.out_dir / "runs" / plan.run.label / "images";
      std::filesystem::create_directories(dir);
      for (std::size_t i = 0; i < synth.size() && i < static_cast<std::size_t>(config.save_images); ++i) {
        core::WriteRgbPng(dir / (plan.eval[i].id + ".png"), synth[i]);
      }
    }
    for (const FeatureEmbedder* e : embedders) {
      plan.run.fd[e->name()] = evaluate_set_similarity(targets, synth, *e, config.embed_threads);
    }
  } catch (const std::exception& e) {
    plan.run.error = e.what();
    spdlog::warn("sweep run {} failed: {}", plan.run.label, e.what());
  }
  plan.run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<core::PairedSample> WithNoise(std::span<const core::PairedSample> samples, double mean_distance,
                                          std::uint64_t seed) {
  std::vector<core::PairedSample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask::NoiseSpec spec;
    spec.mean_distance = mean_distance;
    spec.seed = SampleSeed(seed, i, 0);
    out[i].mask = mask::inject_noise(out[i].mask, spec);
  }
  return out;
}

std::vector<core::PairedSample> WithAirCells(std::span<const core::PairedSample> samples,
                                             const mask::ThresholdSpec& spec) {
  std::vector<core::PairedSample> out(samples.begin(), samples.end());
  for (core::PairedSample& s : out) s.mask = mask::extract_air_cells(s.image, s.mask, spec);
  return out;
}

SweepReport noise_frequency_sweep(std::span<const double> frequencies, const SweepData& data,
                                  const SweepConfig& config, std::span<const FeatureEmbedder* const> embedders) {
  if (frequencies.size() < 2) throw std::invalid_argument("a noise sweep needs at least two mean distances");
  for (double d : frequencies) {
    if (!(d >= 1.0)) throw std::invalid_argument("noise mean distance must be >= 1, got " + FormatDistance(d));
  }
  if (embedders.empty()) throw std::invalid_argument("a noise sweep needs at least one embedder");
  if (data.train.empty()) throw std::invalid_argument("sweep training set is empty");
  if (data.eval.size() < 2) throw std::invalid_argument("sweep eval set needs at least two pairs");
  if (config.steps_per_model <= 0) throw std::invalid_argument("steps_per_model must be positive");
  config.train.Validate();

  std::vector<core::RgbImage> targets;
  for (const core::PairedSample& s : data.eval) targets.push_back(s.image);

  SweepReport report;
  report.primary_embedder = embedders.front()->name();
  if (data.control_real.size() >= 2) {
    for (const FeatureEmbedder* e : embedders) {
      report.reference_fd[e->name()] =
          evaluate_set_similarity(targets, data.control_real, *e, config.embed_threads);
    }
  }

  std::vector<RunPlan> plans;
  if (config.include_polygons_baseline) {
    RunPlan p;
    p.run.label = "polygons";
    p.train.assign(data.train.begin(), data.train.end());
    p.eval.assign(data.eval.begin(), data.eval.end());
    plans.push_back(std::move(p));
  }
  for (double d : frequencies) {
    RunPlan p;
    p.run.label = "noise_d" + FormatDistance(d);
    p.run.resolution = core::Resolution::kPolygonsNoise;
    p.run.mean_distance = d;
    p.train = WithNoise(data.train, d, config.noise_seed);
    p.eval = WithNoise(data.eval, d, config.noise_seed ^ 0x9e3779b97f4a7c15ULL);
    plans.push_back(std::move(p));
  }
  if (config.include_air_cells) {
    RunPlan p;
    p.run.label = "air_cells";
    p.run.resolution = core::Resolution::kPolygonsAirCells;
    p.train = WithAirCells(data.train, config.air_cells);
    p.eval = WithAirCells(data.eval, config.air_cells);
    plans.push_back(std::move(p));
  }

  if (config.parallel) {
    std::vector<std::future<void>> jobs;
    for (RunPlan& p : plans) {
      jobs.push_back(std::async(std::launch::async, [&] { Execute(p, config, targets, embedders); }));
    }
    for (auto& j : jobs) j.get();
  } else {
    for (RunPlan& p : plans) {
      spdlog::info("sweep run {} ({} steps)", p.run.label, config.steps_per_model);
      Execute(p, config, targets, embedders);
    }
  }
  for (RunPlan& p : plans) report.runs.push_back(std::move(p.run));

  double best = std::numeric_limits<double>::infinity();
  for (const SweepRun& r : report.runs) {
    if (!r.mean_distance || r.error) continue;
    const double fd = r.fd.at(report.primary_embedder);
    if (fd < best) {
      best = fd;
      report.optimum = r.mean_distance;
    }
  }

  const SweepRun* baseline = nullptr;
  for (const SweepRun& r : report.runs) {
    if (r.label == "polygons" && !r.error) baseline = &r;
  }
  if (baseline) {
    int better = 0;
    int total = 0;
    for (const FeatureEmbedder* e : embedders) {
      double best_e = std::numeric_limits<double>::infinity();
      for (const SweepRun& r : report.runs) {
        if (!r.mean_distance || r.error) continue;
        const double fd = r.fd.at(e->name());
        best_e = std::min(best_e, fd);
        ++total;
        if (fd < baseline->fd.at(e->name())) ++better;
      }
      if (std::isfinite(best_e) && best_e > 0.0) report.baseline_to_best_ratio[e->name()] = baseline->fd.at(e->name()) / best_e;
    }
    if (total > 0) report.improvement_share = static_cast<double>(better) / total;
  }

  nlohmann::json env;
  env["generator"] = nlohmann::json(config.generator);
  env["discriminator"] = nlohmann::json(config.discriminator);
  env["train"] = nlohmann::json(config.train);
  env["steps_per_model"] = config.steps_per_model;
  env["noise_seed"] = config.noise_seed;
  env["frequencies"] = std::vector<double>(frequencies.begin(), frequencies.end());
  env["n_train"] = data.train.size();
  env["n_eval"] = data.eval.size();
  env["n_control"] = data.control_real.size();
  std::vector<std::string> names;
  for (const FeatureEmbedder* e : embedders) names.push_back(e->name());
  env["embedders"] = names;
  report.environment = std::move(env);
  return report;
}

nlohmann::json SweepReportToJson(const SweepReport& report) {
  nlohmann::json j;
  j["primary_embedder"] = report.primary_embedder;
  j["optimum_mean_distance"] = report.optimum ? nlohmann::json(*report.optimum) : nlohmann::json(nullptr);
  j["reference_fd"] = report.reference_fd;
  j["baseline_to_best_ratio"] = report.baseline_to_best_ratio;
  j["improvement_share"] =
      report.improvement_share ? nlohmann::json(*report.improvement_share) : nlohmann::json(nullptr);
  nlohmann::json runs = nlohmann::json::array();
  for (const SweepRun& r : report.runs) {
    nlohmann::json x;
    x["label"] = r.label;
    x["resolution"] = std::string(core::ResolutionName(r.resolution));
    x["mean_distance"] = r.mean_distance ? nlohmann::json(*r.mean_distance) : nlohmann::json(nullptr);
    x["fd"] = r.fd;
    x["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
    x["checkpoint"] = r.checkpoint ? nlohmann::json(r.checkpoint->string()) : nlohmann::json(nullptr);
    x["steps"] = r.steps;
    x["seconds"] = r.seconds;
    runs.push_back(std::move(x));
  }
  j["runs"] = std::move(runs);
  j["environment"] = report.environment;
  return j;
}

}  // namespace histosynth::similarity
