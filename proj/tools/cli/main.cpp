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
#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "histosynth/config/run_config.h"
#include "histosynth/core/manifest.h"
#include "histosynth/core/png_io.h"
#include "histosynth/core/tps.h"
#include "histosynth/corpus/pseudo_histology.h"
#include "histosynth/gan/model.h"
#include "histosynth/gan/trainer.h"
#include "histosynth/mask/air_cells.h"
#include "histosynth/mask/noise.h"
#include "histosynth/mask/polygon.h"
#include "histosynth/mask/synthesize.h"
#include "histosynth/seg/train.h"
#include "histosynth/similarity/frechet.h"
#include "histosynth/similarity/sweep.h"
#include "histosynth/turing/server.h"

namespace fs = std::filesystem;
using namespace histosynth;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

config::RunConfig LoadConfig(const Globals& g) {
  config::RunConfig c = g.config_path.empty() ? config::RunConfig{} : config::LoadRunConfig(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.train.seed = *g.seed;
    c.seg.seed = *g.seed;
  }
  return c;
}

// Standard artifact layout plus the config echo.
void PrepareOut(const fs::path& out, const config::RunConfig& c) {
  for (const char* sub : {"configs", "checkpoints", "reports", "images", "masks"}) fs::create_directories(out / sub);
  config::EchoRunConfig(c, out);
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void WriteJson(const fs::path& path, const nlohmann::json& j) { WriteText(path, j.dump(2) + "\n"); }

std::vector<fs::path> ListPngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no .png files in " + dir.string());
  return out;
}

std::vector<core::RgbImage> LoadImages(const fs::path& dir) {
  std::vector<core::RgbImage> out;
  for (const fs::path& p : ListPngs(dir)) out.push_back(core::ReadRgbPng(p));
  return out;
}

std::vector<core::PairedSample> LoadSplit(const fs::path& manifest, std::optional<core::Split> split) {
  return core::LoadPairs(core::LoadManifest(manifest), split);
}

// Converts polygon-level pairs to the configured label resolution.
std::vector<core::PairedSample> AtResolution(std::vector<core::PairedSample> samples, const config::RunConfig& c,
                                             std::uint64_t stream) {
  const core::Resolution r = *core::ParseResolution(c.mask.resolution);
  if (r == core::Resolution::kPolygonsNoise) return similarity::WithNoise(samples, c.mask.mean_distance, c.seed ^ stream);
  if (r == core::Resolution::kPolygonsAirCells) return similarity::WithAirCells(samples, c.mask.thresholds);
  return samples;
}

std::vector<const similarity::FeatureEmbedder*> Raw(const std::vector<std::unique_ptr<similarity::FeatureEmbedder>>& v) {
  std::vector<const similarity::FeatureEmbedder*> out;
  for (const auto& e : v) out.push_back(e.get());
  return out;
}

std::vector<std::unique_ptr<similarity::FeatureEmbedder>> MakeEmbedders(const std::vector<std::string>& names) {
  std::vector<std::unique_ptr<similarity::FeatureEmbedder>> out;
  for (const std::string& n : names) out.push_back(similarity::MakeEmbedder(n));
  return out;
}

// ---- mask ------------------------------------------------------------------

int MaskRasterize(const Globals& g, const fs::path& polygons, int width, int height, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const auto annotations = mask::LoadPolygonsJson(polygons);
  const core::LabelGrid m = mask::rasterize_polygons(annotations, width, height);
  core::WriteMaskPng(out / "masks" / (polygons.stem().string() + ".png"), m);
  spdlog::info("rasterized {} polygons to {}x{}", annotations.size(), width, height);
  return 0;
}

int MaskNoise(const Globals& g, const fs::path& in, std::optional<double> mean_distance, const fs::path& out) {
  config::RunConfig c = LoadConfig(g);
  if (mean_distance) c.mask.mean_distance = *mean_distance;
  PrepareOut(out, c);
  mask::NoiseSpec spec{c.mask.mean_distance, c.seed};
  const core::LabelGrid noisy = mask::inject_noise(core::ReadMaskPng(in), spec);
  core::WriteMaskPng(out / "masks" / in.filename(), noisy);
  spdlog::info("noise p = {:.6g}", mask::NoiseProbability(spec, noisy.width(), noisy.height()));
  return 0;
}

int MaskAirCells(const Globals& g, const fs::path& mask_path, const fs::path& image_path, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const core::RgbImage image = core::ReadRgbPng(image_path);
  const core::LabelGrid m = mask::extract_air_cells(image, core::ReadMaskPng(mask_path), c.mask.thresholds);
  core::WriteMaskPng(out / "masks" / mask_path.filename(), m);
  const mask::ThresholdSpec used = mask::ResolveThresholds(image, c.mask.thresholds);
  spdlog::info("air > {}, cell < {}", used.air_threshold, used.cell_threshold);
  return 0;
}

int MaskSynth(const Globals& g, double tps, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const core::LabelGrid m = mask::synthesize_mask(tps, mask::MaskLayout{}, c.data.width, c.data.height, c.seed);
  char name[64];
  std::snprintf(name, sizeof(name), "synth_tps_%.4f.png", tps);
  core::WriteMaskPng(out / "masks" / name, m);
  spdlog::info("target TPS {:.4f}, achieved {:.4f}", tps, core::compute_tps(m));
  return 0;
}

int MaskCorpus(const Globals& g, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  corpus::CorpusOptions opts{c.data.corpus_size, c.data.width, c.data.height, c.seed};
  const auto samples = corpus::GenerateCorpus(opts);
  const core::DatasetManifest all = corpus::WriteCorpus(out, samples);
  const auto [train, test] = core::split_dataset(all, c.data.split_fraction, true, c.seed);
  core::DatasetManifest labelled;
  for (const auto& e : train.entries) labelled.entries.push_back(e);
  for (const auto& e : test.entries) labelled.entries.push_back(e);
  core::SaveManifest(out / "manifest.jsonl", labelled);
  spdlog::info("wrote {} pairs ({} train / {} test) to {}", samples.size(), train.entries.size(),
               test.entries.size(), out.string());
  return 0;
}

// ---- gan -------------------------------------------------------------------

int GanTrain(const Globals& g, const fs::path& manifest, const fs::path& out, std::optional<std::int64_t> max_steps,
             const std::string& resume) {
  config::RunConfig c = LoadConfig(g);
  if (max_steps) c.train_max_steps = *max_steps;
  PrepareOut(out, c);
  const auto samples = AtResolution(LoadSplit(manifest, core::Split::kTrain), c, 0);
  if (samples.empty()) throw std::runtime_error("manifest has no training pairs");
  const auto pairs = gan::PrepareTrainingPairs(samples);

  std::unique_ptr<gan::GanModel> model = resume.empty()
                                             ? std::make_unique<gan::GanModel>(c.generator, c.discriminator, c.train)
                                             : gan::LoadCheckpoint(resume);
  gan::TrainOptions options;
  options.out_dir = out;
  if (c.train_max_steps > 0) options.max_steps = c.train_max_steps;
  options.on_step = [](const gan::LossRecord& r) {
    if (r.step % 50 == 0) {
      spdlog::info("epoch {} step {} d_real {:.4f} d_fake {:.4f} g_adv {:.4f} g_fm {:.4f}", r.epoch, r.step,
                   r.d_loss_real, r.d_loss_fake, r.g_adv, r.g_fm);
    }
  };
  const gan::TrainResult result = gan::train(*model, pairs, options);
  spdlog::info("trained {} steps; checkpoint {}", result.log.size(),
               result.last_checkpoint ? result.last_checkpoint->string() : "none");
  return 0;
}

int GanSynth(const Globals& g, const fs::path& checkpoint, const fs::path& masks, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const auto model = gan::LoadCheckpoint(checkpoint);
  std::vector<fs::path> files = fs::is_directory(masks) ? ListPngs(masks) : std::vector<fs::path>{masks};
  std::vector<core::PairedSample> samples;
  for (const fs::path& f : files) {
    core::PairedSample s;
    s.id = f.stem().string();
    s.mask = core::ReadMaskPng(f);
    samples.push_back(std::move(s));
  }
  if (*core::ParseResolution(c.mask.resolution) == core::Resolution::kPolygonsNoise) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].mask.resolution() == core::Resolution::kPolygons) {
        samples[i].mask = mask::inject_noise(samples[i].mask, {c.mask.mean_distance, c.seed + i});
      }
    }
  }
  for (const core::PairedSample& s : samples) {
    core::WriteRgbPng(out / "images" / (s.id + ".png"), gan::SynthesizeImage(*model, s.mask));
  }
  spdlog::info("synthesized {} images", samples.size());
  return 0;
}

// ---- eval ------------------------------------------------------------------

int EvalFd(const Globals& g, const fs::path& real, const fs::path& synth, const std::string& embedder_name,
           const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const auto embedder = similarity::MakeEmbedder(embedder_name, c.seed);
  const auto a = LoadImages(real);
  const auto b = LoadImages(synth);
  const double fd = similarity::evaluate_set_similarity(a, b, *embedder);
  WriteJson(out / "reports" / "fd_report.json", {{"embedder", embedder->name()},
                                                   {"real", real.string()},
                                                   {"synth", synth.string()},
                                                   {"n_real", a.size()},
                                                   {"n_synth", b.size()},
                                                   {"fd", fd}});
  std::cout << fd << "\n";
  return 0;
}

std::vector<double> ParseFrequencies(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--freqs", "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int Sweep(const Globals& g, const std::string& manifest, const std::string& freqs, std::optional<std::int64_t> steps,
          bool parallel, bool air_cells, const fs::path& out) {
  config::RunConfig c = LoadConfig(g);
  if (!freqs.empty()) c.eval.frequencies = ParseFrequencies(freqs);
  if (steps) c.eval.steps_per_model = *steps;
  PrepareOut(out, c);

  std::vector<core::PairedSample> train;
  std::vector<core::PairedSample> eval;
  std::vector<core::RgbImage> control;
  if (manifest.empty()) {
    train = corpus::GenerateCorpus({c.data.corpus_size, c.data.width, c.data.height, c.seed});
    eval = corpus::GenerateCorpus({c.eval.n_eval, c.data.width, c.data.height, c.seed + 1});
    for (const auto& s : corpus::GenerateCorpus({c.eval.n_eval, c.data.width, c.data.height, c.seed + 2})) {
      control.push_back(s.image);
    }
  } else {
    train = LoadSplit(manifest, core::Split::kTrain);
    auto test = LoadSplit(manifest, core::Split::kTest);
    const std::size_t half = test.size() / 2;
    eval.assign(test.begin(), test.begin() + static_cast<std::ptrdiff_t>(half));
    for (std::size_t i = half; i < test.size(); ++i) control.push_back(test[i].image);
  }

  similarity::SweepConfig sc;
  sc.generator = c.generator;
  sc.discriminator = c.discriminator;
  sc.train = c.train;
  sc.steps_per_model = c.eval.steps_per_model;
  sc.noise_seed = c.seed;
  sc.include_air_cells = air_cells;
  sc.air_cells = c.mask.thresholds;
  sc.parallel = parallel;
  sc.out_dir = out;
  sc.save_images = 8;
  const auto embedders = MakeEmbedders(c.eval.embedders);
  const auto raw = Raw(embedders);
  const similarity::SweepReport report =
      similarity::noise_frequency_sweep(c.eval.frequencies, {train, eval, control}, sc, raw);
  WriteJson(out / "reports" / "sweep_report.json", similarity::SweepReportToJson(report));
  if (report.optimum) spdlog::info("optimum mean distance {}", *report.optimum);
  return 0;
}

// ---- seg -------------------------------------------------------------------

void WriteSegReport(const fs::path& out, const std::string& stem, const seg::SegReport& r) {
  WriteJson(out / "reports" / (stem + ".json"), seg::SegReportToJson(r));
  WriteText(out / "reports" / (stem + "_per_class.csv"), seg::SegReportClassCsv(r));
}

int SegTrain(const Globals& g, const fs::path& manifest, const fs::path& out) {
  config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  c.seg.checkpoint_dir = out / "checkpoints";
  const auto train = LoadSplit(manifest, core::Split::kTrain);
  const seg::SegTrainResult result = seg::train_segmenter(train, c.seg);
  std::ostringstream log;
  log << "step,epoch,loss,dice_loss,cross_entropy\n";
  for (const auto& r : result.log) log << r.step << ',' << r.epoch << ',' << r.loss << ',' << r.dice_loss << ',' << r.cross_entropy << '\n';
  WriteText(out / "reports" / "seg_loss_log.csv", log.str());
  const auto test = LoadSplit(manifest, core::Split::kTest);
  if (!test.empty()) WriteSegReport(out, "seg_report", seg::evaluate_segmenter(*result.model, test));
  return 0;
}

int SegEval(const Globals& g, const fs::path& checkpoint, const fs::path& manifest, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const auto model = seg::LoadSegmenter(checkpoint);
  auto test = LoadSplit(manifest, core::Split::kTest);
  if (test.empty()) test = LoadSplit(manifest, std::nullopt);
  const seg::SegReport r = seg::evaluate_segmenter(*model, test);
  WriteSegReport(out, "seg_report", r);
  std::cout << seg::SegReportToJson(r).dump(2) << "\n";
  return 0;
}

int SegAugment(const Globals& g, const fs::path& baseline, const fs::path& synth, const fs::path& control,
               const fs::path& test, const fs::path& out) {
  const config::RunConfig c = LoadConfig(g);
  PrepareOut(out, c);
  const auto real = LoadSplit(baseline, std::nullopt);
  const auto syn = LoadSplit(synth, std::nullopt);
  const auto ctl = LoadSplit(control, std::nullopt);
  const auto tst = LoadSplit(test, std::nullopt);
  const seg::AugmentationReport r = seg::augmentation_experiment(real, syn, ctl, tst, c.seg);
  WriteJson(out / "reports" / "augmentation_report.json", seg::AugmentationReportToJson(r));
  for (const auto& arm : r.arms) {
    std::string stem = arm.name;
    std::replace(stem.begin(), stem.end(), '+', '_');
    WriteText(out / "reports" / (stem + "_per_class.csv"), seg::SegReportClassCsv(arm.report));
  }
  return 0;
}

// ---- turing ----------------------------------------------------------------

std::atomic<turing::TuringServer*> g_server{nullptr};

int TuringServe(const Globals& g, const fs::path& real, const fs::path& synth, std::optional<std::string> host,
                std::optional<int> port, const fs::path& out) {
  config::RunConfig c = LoadConfig(g);
  if (host) c.turing.host = *host;
  if (port) c.turing.port = *port;
  PrepareOut(out, c);
  turing::ServerOptions options;
  if (!real.empty()) {
    for (const fs::path& p : ListPngs(real)) options.default_real.push_back(fs::absolute(p).string());
  }
  if (!synth.empty()) {
    for (const fs::path& p : ListPngs(synth)) options.default_synth.push_back(fs::absolute(p).string());
  }
  turing::SessionStore store(out / c.turing.sessions_dir);
  store.LoadExisting();
  turing::TuringServer server(store, options);
  const int bound = server.Bind(c.turing.host, c.turing.port);
  spdlog::info("turing service on http://{}:{}", c.turing.host, bound);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->Stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->Stop();
  });
  server.Listen();
  g_server = nullptr;
  return 0;
}

// ---- demo ------------------------------------------------------------------

int Demo(const Globals& g, const fs::path& out) {
  config::RunConfig c = LoadConfig(g);
  c.data.corpus_size = 16;
  c.eval.n_eval = 8;
  c.train_max_steps = 50;
  PrepareOut(out, c);

  spdlog::info("demo: procedural corpus");
  const auto train = corpus::GenerateCorpus({c.data.corpus_size, c.data.width, c.data.height, c.seed});
  const auto eval = corpus::GenerateCorpus({c.eval.n_eval, c.data.width, c.data.height, c.seed + 1});
  corpus::WriteCorpus(out / "corpus", train);

  spdlog::info("demo: noise masks (mean distance {})", c.mask.mean_distance);
  const auto noisy_train = similarity::WithNoise(train, c.mask.mean_distance, c.seed);
  const auto noisy_eval = similarity::WithNoise(eval, c.mask.mean_distance, c.seed + 1);

  spdlog::info("demo: {} GAN training steps", c.train_max_steps);
  gan::GanModel model(c.generator, c.discriminator, c.train);
  gan::TrainOptions options;
  options.out_dir = out;
  options.max_steps = c.train_max_steps;
  const auto pairs = gan::PrepareTrainingPairs(noisy_train);
  const gan::TrainResult result = gan::train(model, pairs, options);

  std::vector<core::RgbImage> real;
  std::vector<core::RgbImage> synth;
  for (const auto& s : noisy_eval) {
    real.push_back(s.image);
    synth.push_back(gan::SynthesizeImage(model, s.mask));
    core::WriteRgbPng(out / "images" / (s.id + ".png"), synth.back());
  }
  nlohmann::json report = {{"steps", result.log.size()}, {"n_eval", real.size()}};
  for (const auto& e : MakeEmbedders(c.eval.embedders)) {
    report["fd"][e->name()] = similarity::evaluate_set_similarity(real, synth, *e);
  }
  WriteJson(out / "reports" / "fd_report.json", report);
  spdlog::info("demo: report at {}", (out / "reports" / "fd_report.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"histosynth: synthetic IHC tiles from semantic masks, and their evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run config (key = value format)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed (overrides the config)");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  std::function<int()> action;
  fs::path out;
  auto out_opt = [&](CLI::App* sub) { sub->add_option("--out", out, "Artifact directory")->required(); };

  // mask
  CLI::App* mask_cmd = app.add_subcommand("mask", "Mask generation")->require_subcommand(1);
  fs::path polygons, mask_in, image_in;
  int width = 128, height = 64;
  std::optional<double> mean_distance;
  double tps = 0.0;
  {
    auto* s = mask_cmd->add_subcommand("rasterize", "Polygon annotations to a label mask");
    s->add_option("--polygons", polygons, "Polygon JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--width", width)->check(CLI::PositiveNumber);
    s->add_option("--height", height)->check(CLI::PositiveNumber);
    out_opt(s);
    s->callback([&] { action = [&] { return MaskRasterize(g, polygons, width, height, out); }; });
  }
  {
    auto* s = mask_cmd->add_subcommand("noise", "Inject single-pixel NOISE labels");
    s->add_option("--mask", mask_in, "Polygon-level mask PNG")->required()->check(CLI::ExistingFile);
    s->add_option("--mean-distance", mean_distance, "Mean distance d between noise pixels (p = 1/d^2)");
    out_opt(s);
    s->callback([&] { action = [&] { return MaskNoise(g, mask_in, mean_distance, out); }; });
  }
  {
    auto* s = mask_cmd->add_subcommand("aircells", "Overlay thresholded AIR and CELL labels");
    s->add_option("--mask", mask_in)->required()->check(CLI::ExistingFile);
    s->add_option("--image", image_in)->required()->check(CLI::ExistingFile);
    out_opt(s);
    s->callback([&] { action = [&] { return MaskAirCells(g, mask_in, image_in, out); }; });
  }
  {
    auto* s = mask_cmd->add_subcommand("synth", "Random polygon mask with a target TPS");
    s->add_option("--tps", tps)->required()->check(CLI::Range(0.0, 1.0));
    out_opt(s);
    s->callback([&] { action = [&] { return MaskSynth(g, tps, out); }; });
  }
  {
    auto* s = mask_cmd->add_subcommand("corpus", "Procedural paired corpus with a manifest");
    out_opt(s);
    s->callback([&] { action = [&] { return MaskCorpus(g, out); }; });
  }

  // gan
  CLI::App* gan_cmd = app.add_subcommand("gan", "Generator training and synthesis")->require_subcommand(1);
  fs::path manifest, checkpoint, masks_in;
  std::optional<std::int64_t> max_steps;
  std::string resume;
  {
    auto* s = gan_cmd->add_subcommand("train", "Train on the train split of a manifest");
    s->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    s->add_option("--max-steps", max_steps)->check(CLI::PositiveNumber);
    s->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
    out_opt(s);
    s->callback([&] { action = [&] { return GanTrain(g, manifest, out, max_steps, resume); }; });
  }
  {
    auto* s = gan_cmd->add_subcommand("synth", "Synthesize images from masks");
    s->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    s->add_option("--masks", masks_in, "Mask PNG or directory of mask PNGs")->required()->check(CLI::ExistingPath);
    out_opt(s);
    s->callback([&] { action = [&] { return GanSynth(g, checkpoint, masks_in, out); }; });
  }

  // eval
  CLI::App* eval_cmd = app.add_subcommand("eval", "Image-set similarity")->require_subcommand(1);
  fs::path real_dir, synth_dir;
  std::string embedder = "toy";
  std::string freqs;
  std::optional<std::int64_t> steps;
  bool parallel = false;
  bool air_cells = false;
  std::string sweep_manifest;
  auto sweep_opts = [&](CLI::App* s) {
    s->add_option("--manifest", sweep_manifest, "Paired data (default: procedural corpus)")->check(CLI::ExistingFile);
    s->add_option("--freqs", freqs, "Comma-separated mean distances, e.g. 2,5,10,15");
    s->add_option("--steps", steps, "Training steps per model")->check(CLI::PositiveNumber);
    s->add_flag("--parallel", parallel, "Train the runs concurrently");
    s->add_flag("--air-cells", air_cells, "Add an air/cells resolution run");
    out_opt(s);
    s->callback([&] { action = [&] { return Sweep(g, sweep_manifest, freqs, steps, parallel, air_cells, out); }; });
  };
  {
    auto* s = eval_cmd->add_subcommand("fd", "Frechet distance between two image directories");
    s->add_option("--real", real_dir)->required()->check(CLI::ExistingDirectory);
    s->add_option("--synth", synth_dir)->required()->check(CLI::ExistingDirectory);
    s->add_option("--embedder", embedder, "toy, projection or file:<weights.json>");
    out_opt(s);
    s->callback([&] { action = [&] { return EvalFd(g, real_dir, synth_dir, embedder, out); }; });
  }
  sweep_opts(eval_cmd->add_subcommand("sweep", "Noise-frequency sweep"));
  sweep_opts(app.add_subcommand("sweep", "Noise-frequency sweep (same as eval sweep)"));

  // seg
  CLI::App* seg_cmd = app.add_subcommand("seg", "Segmentation training and evaluation")->require_subcommand(1);
  fs::path baseline_m, synth_m, control_m, test_m;
  {
    auto* s = seg_cmd->add_subcommand("train", "Train a segmenter on the train split");
    s->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    out_opt(s);
    s->callback([&] { action = [&] { return SegTrain(g, manifest, out); }; });
  }
  {
    auto* s = seg_cmd->add_subcommand("eval", "Score a segmenter checkpoint");
    s->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    s->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    out_opt(s);
    s->callback([&] { action = [&] { return SegEval(g, checkpoint, manifest, out); }; });
  }
  {
    auto* s = seg_cmd->add_subcommand("augment-exp", "Baseline vs +synthetic vs +control-real");
    s->add_option("--baseline", baseline_m, "Real training manifest")->required()->check(CLI::ExistingFile);
    s->add_option("--synth", synth_m, "Synthetic pairs manifest")->required()->check(CLI::ExistingFile);
    s->add_option("--control", control_m, "Extra real pairs manifest")->required()->check(CLI::ExistingFile);
    s->add_option("--test", test_m, "Test manifest")->required()->check(CLI::ExistingFile);
    out_opt(s);
    s->callback([&] { action = [&] { return SegAugment(g, baseline_m, synth_m, control_m, test_m, out); }; });
  }

  // turing
  CLI::App* turing_cmd = app.add_subcommand("turing", "Blind rating service")->require_subcommand(1);
  std::optional<std::string> host;
  std::optional<int> port;
  {
    auto* s = turing_cmd->add_subcommand("serve", "Serve the rating API");
    s->add_option("--real", real_dir, "Directory of real images")->check(CLI::ExistingDirectory);
    s->add_option("--synth", synth_dir, "Directory of synthetic images")->check(CLI::ExistingDirectory);
    s->add_option("--host", host);
    s->add_option("--port", port)->check(CLI::Range(0, 65535));
    out_opt(s);
    s->callback([&] { action = [&] { return TuringServe(g, real_dir, synth_dir, host, port, out); }; });
  }

  {
    auto* s = app.add_subcommand("demo", "Tiny end-to-end run");
    out_opt(s);
    s->callback([&] { action = [&] { return Demo(g, out); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto logger = spdlog::stderr_color_mt("histosynth");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    return action ? action() : 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
