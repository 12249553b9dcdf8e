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
#include "histosynth/seg/train.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "histosynth/nn/adam.h"

namespace histosynth::seg {

using nn::Tensor;

namespace {

constexpr char kMagic[8] = {'H', 'S', 'S', 'E', 'G', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr double kSoftDiceEps = 1.0;

void CheckBaseMask(const core::LabelGrid& mask, int n_classes, const std::string& id) {
  for (core::ClassId c : mask.labels()) {
    if (static_cast<int>(c) >= n_classes) {
      throw std::invalid_argument("mask " + id + " holds label " + std::string(core::ClassName(c)) +
                                  " outside the " + std::to_string(n_classes) + " segmentation classes");
    }
  }
}

core::RgbImage Flip(const core::RgbImage& image, bool h, bool v) {
  core::RgbImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const int sx = h ? image.width() - 1 - x : x;
      const int sy = v ? image.height() - 1 - y : y;
      out.set(x, y, {image.at(sx, sy, 0), image.at(sx, sy, 1), image.at(sx, sy, 2)});
    }
  }
  return out;
}

core::LabelGrid Flip(const core::LabelGrid& mask, bool h, bool v) {
  core::LabelGrid out(mask.width(), mask.height(), core::ClassId::kOther, mask.resolution());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      out.set(x, y, mask.at(h ? mask.width() - 1 - x : x, v ? mask.height() - 1 - y : y));
    }
  }
  return out;
}

std::size_t ContentHash(const core::PairedSample& s) {
  const auto& d = s.image.data();
  return std::hash<std::string_view>{}(std::string_view(reinterpret_cast<const char*>(d.data()), d.size()));
}

}  // namespace

template <typename T>
Tensor<T> Softmax(const Tensor<T>& logits) {
  Tensor<T> p(logits.channels, logits.height, logits.width);
  const std::size_t plane = logits.plane();
  for (std::size_t k = 0; k < plane; ++k) {
    double mx = -INFINITY;
    for (int c = 0; c < logits.channels; ++c) mx = std::max<double>(mx, logits.channel(c)[k]);
    double sum = 0.0;
    for (int c = 0; c < logits.channels; ++c) sum += std::exp(static_cast<double>(logits.channel(c)[k]) - mx);
    for (int c = 0; c < logits.channels; ++c) {
      p.channel(c)[k] = static_cast<T>(std::exp(static_cast<double>(logits.channel(c)[k]) - mx) / sum);
    }
  }
  return p;
}

template <typename T>
SegLoss<T> SegmentationLoss(const Tensor<T>& logits, const core::LabelGrid& gt, double ce_weight) {
  if (logits.width != gt.width() || logits.height != gt.height()) {
    throw std::invalid_argument("logits " + logits.ShapeString() + " do not match mask size");
  }
  const int n_classes = logits.channels;
  const std::size_t n = logits.plane();
  const Tensor<T> p = Softmax(logits);
  std::vector<int> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = static_cast<int>(gt.labels()[k]);
    if (y[k] >= n_classes) throw std::out_of_range("mask label outside the logit channels");
  }

  SegLoss<T> out;
  // d loss / d p, then through the softmax.
  std::vector<double> gp(static_cast<std::size_t>(n_classes) * n, 0.0);
  double dice_sum = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    double inter = 0.0;
    double psum = 0.0;
    double ysum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double pk = p.channel(c)[k];
      const double yk = y[k] == c ? 1.0 : 0.0;
      inter += pk * yk;
      psum += pk;
      ysum += yk;
    }
    const double den = psum + ysum + kSoftDiceEps;
    const double num = 2.0 * inter + kSoftDiceEps;
    dice_sum += num / den;
    for (std::size_t k = 0; k < n; ++k) {
      const double yk = y[k] == c ? 1.0 : 0.0;
      gp[static_cast<std::size_t>(c) * n + k] = -(2.0 * yk * den - num) / (den * den) / n_classes;
    }
  }
  out.dice_loss = 1.0 - dice_sum / n_classes;

  double nll = 0.0;
  for (std::size_t k = 0; k < n; ++k) nll -= std::log(std::max<double>(p.channel(y[k])[k], 1e-12));
  out.cross_entropy = nll / static_cast<double>(n);
  out.loss = out.dice_loss + ce_weight * out.cross_entropy;

  out.grad_logits = Tensor<T>(n_classes, logits.height, logits.width);
  for (std::size_t k = 0; k < n; ++k) {
    double dot = 0.0;
    for (int c = 0; c < n_classes; ++c) dot += p.channel(c)[k] * gp[static_cast<std::size_t>(c) * n + k];
    for (int c = 0; c < n_classes; ++c) {
      const double pc = p.channel(c)[k];
      const double dice_grad = pc * (gp[static_cast<std::size_t>(c) * n + k] - dot);
      const double ce_grad = (pc - (y[k] == c ? 1.0 : 0.0)) / static_cast<double>(n);
      out.grad_logits.channel(c)[k] = static_cast<T>(dice_grad + ce_weight * ce_grad);
    }
  }
  return out;
}

nn::Tensor<float> SegmenterInput(const core::RgbImage& image) {
  Tensor<float> t(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = image.at(x, y, c) / 127.5f - 1.0f;
    }
  }
  return t;
}

void SegTrainConfig::Validate() const {
  model.Validate();
  if (steps <= 0) throw std::invalid_argument("segmenter steps must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("segmenter lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("segmenter Adam betas must be in [0, 1)");
  }
  if (!(ce_weight >= 0.0)) throw std::invalid_argument("ce_weight must be non-negative");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be non-negative");
}

void to_json(nlohmann::json& j, const SegTrainConfig& c) {
  j = {{"model", c.model},       {"steps", c.steps},
       {"lr", c.lr},             {"beta1", c.beta1},
       {"beta2", c.beta2},       {"ce_weight", c.ce_weight},
       {"augment_flips", c.augment_flips}, {"seed", c.seed},
       {"checkpoint_every", c.checkpoint_every}};
  j["checkpoint_dir"] = c.checkpoint_dir ? nlohmann::json(c.checkpoint_dir->string()) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SegTrainConfig& c) {
  c.model = j.at("model").get<SegmenterConfig>();
  c.steps = j.at("steps").get<std::int64_t>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.ce_weight = j.at("ce_weight").get<double>();
  c.augment_flips = j.at("augment_flips").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_every = j.value("checkpoint_every", std::int64_t{0});
  if (j.contains("checkpoint_dir") && !j["checkpoint_dir"].is_null()) {
    c.checkpoint_dir = j["checkpoint_dir"].get<std::string>();
  }
  c.Validate();
}

SegTrainResult train_segmenter(std::span<const core::PairedSample> train, const SegTrainConfig& config) {
  config.Validate();
  if (train.empty()) throw std::invalid_argument("segmenter training set is empty");
  for (const core::PairedSample& s : train) {
    CheckBaseMask(s.mask, config.model.n_classes, s.id);
    if (s.image.width() != s.mask.width() || s.image.height() != s.mask.height()) {
      throw std::invalid_argument("image and mask sizes differ for " + s.id);
    }
  }

  SegTrainResult result;
  result.model = std::make_unique<UNetPlusPlus<float>>(config.model);
  nn::ParameterList<float> params = result.model->Parameters();
  std::mt19937_64 rng(config.seed);
  InitHe(params, rng);
  nn::Adam<float> opt(params, nn::AdamOptions{config.beta1, config.beta2, 1e-8});

  std::vector<std::size_t> order(train.size());
  int epoch = -1;
  std::size_t cursor = order.size();
  for (std::int64_t step = 0; step < config.steps; ++step) {
    if (cursor == order.size()) {
      ++epoch;
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const core::PairedSample& s = train[order[cursor++]];
    bool flip_h = false;
    bool flip_v = false;
    if (config.augment_flips) {
      const std::uint64_t bits = rng();
      flip_h = bits & 1u;
      flip_v = bits & 2u;
    }
    const core::RgbImage image = flip_h || flip_v ? Flip(s.image, flip_h, flip_v) : s.image;
    const core::LabelGrid mask = flip_h || flip_v ? Flip(s.mask, flip_h, flip_v) : s.mask;

    nn::ZeroGrad(params);
    const Tensor<float> logits = result.model->Forward(SegmenterInput(image));
    SegLoss<float> loss = SegmentationLoss(logits, mask, config.ce_weight);
    if (!std::isfinite(loss.loss)) {
      throw SegTrainingDivergedError("segmenter loss became non-finite at step " + std::to_string(step) +
                                     " on sample " + s.id + " (dice " + std::to_string(loss.dice_loss) + ", ce " +
                                     std::to_string(loss.cross_entropy) + ")");
    }
    result.model->Backward(loss.grad_logits);
    opt.Step(config.lr);
    result.log.push_back({step, epoch, loss.loss, loss.dice_loss, loss.cross_entropy});

    if (config.checkpoint_dir && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      SaveSegmenter(*result.model, *config.checkpoint_dir / "segmenter_latest.ckpt");
    }
  }
  if (config.checkpoint_dir) SaveSegmenter(*result.model, *config.checkpoint_dir / "segmenter_latest.ckpt");
  return result;
}

Prediction Predict(const UNetPlusPlus<float>& model, const core::RgbImage& image) {
  const Tensor<float> logits = model.Infer(SegmenterInput(image));
  const Tensor<double> p = Softmax(logits.Cast<double>());
  Prediction out{core::LabelGrid(image.width(), image.height()), p};
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      int best = 0;
      for (int c = 1; c < p.channels; ++c) {
        if (p.at(c, y, x) > p.at(best, y, x)) best = c;
      }
      out.labels.set(x, y, static_cast<core::ClassId>(best));
    }
  }
  return out;
}

SegReport MakeSegReport(const ConfusionTensor& ct, std::span<const ProbabilityMap> probs,
                        std::span<const core::LabelGrid> gt) {
  SegReport r;
  r.miou = miou(ct);
  r.wiou = wiou(ct);
  r.wprecision = wprecision(ct);
  r.wrecall = wrecall(ct);
  r.tobjective = tobjective(ct, probs, gt);
  r.n_images = ct.n_images();
  const std::vector<ClassCounts> totals = ct.Totals();
  for (int c = 0; c < ct.n_classes; ++c) {
    const ClassCounts& t = totals[static_cast<std::size_t>(c)];
    r.per_class.push_back({std::string(core::ClassName(static_cast<core::ClassId>(c))), IoU(t), Precision(t), Recall(t),
                           Dice(t), t.support()});
  }
  return r;
}

SegReport evaluate_segmenter(const UNetPlusPlus<float>& model, std::span<const core::PairedSample> test) {
  if (test.empty()) throw std::invalid_argument("segmentation test set is empty");
  const int n_classes = model.config().n_classes;
  std::vector<core::LabelGrid> gt;
  std::vector<core::LabelGrid> pred;
  std::vector<ProbabilityMap> probs;
  for (const core::PairedSample& s : test) {
    CheckBaseMask(s.mask, n_classes, s.id);
    Prediction p = Predict(model, s.image);
    gt.push_back(s.mask);
    pred.push_back(std::move(p.labels));
    probs.push_back(std::move(p.probabilities));
  }
  return MakeSegReport(confusion(pred, gt, n_classes), probs, gt);
}

nlohmann::json SegReportToJson(const SegReport& report) {
  nlohmann::json j;
  j["n_images"] = report.n_images;
  j["miou"] = report.miou;
  j["wiou"] = report.wiou;
  j["wprecision"] = report.wprecision;
  j["wrecall"] = report.wrecall;
  if (std::isfinite(report.tobjective.value)) j["tobjective"] = report.tobjective.value;
  else j["tobjective"] = "inf";
  j["tobjective_mean_dice"] = report.tobjective.mean_dice;
  j["tobjective_cross_entropy"] = report.tobjective.cross_entropy;
  if (!report.tobjective.diagnostic.empty()) j["tobjective_diagnostic"] = report.tobjective.diagnostic;
  nlohmann::json classes = nlohmann::json::array();
  for (const ClassReport& c : report.per_class) {
    classes.push_back({{"class", c.name},
                       {"iou", c.iou},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"dice", c.dice},
                       {"support", c.support}});
  }
  j["per_class"] = std::move(classes);
  j["conventions"] = {
      {"empty_class", "0/0 ratios count as 1 when a class is absent from prediction and ground truth"},
      {"weights", "per-image class pixel share"},
      {"cross_entropy", "pixel mean"}};
  return j;
}

std::string SegReportClassCsv(const SegReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "class,iou,precision,recall,dice,support\n";
  for (const ClassReport& c : report.per_class) {
    out << c.name << ',' << c.iou << ',' << c.precision << ',' << c.recall << ',' << c.dice << ',' << c.support
        << '\n';
  }
  return out.str();
}

AugmentationReport augmentation_experiment(std::span<const core::PairedSample> real_train,
                                           std::span<const core::PairedSample> synth,
                                           std::span<const core::PairedSample> control_real,
                                           std::span<const core::PairedSample> test, const SegTrainConfig& config) {
  if (real_train.empty() || synth.empty() || control_real.empty() || test.empty()) {
    throw std::invalid_argument("augmentation experiment needs non-empty real, synthetic, control and test sets");
  }
  std::set<std::string> test_ids;
  std::set<std::size_t> test_hashes;
  for (const core::PairedSample& s : test) {
    test_ids.insert(s.id);
    test_hashes.insert(ContentHash(s));
  }
  auto check_disjoint = [&](std::span<const core::PairedSample> set, const char* what) {
    for (const core::PairedSample& s : set) {
      if (test_ids.contains(s.id)) {
        throw std::invalid_argument(std::string(what) + " sample " + s.id + " also appears in the test set");
      }
      if (test_hashes.contains(ContentHash(s))) {
        for (const core::PairedSample& t : test) {
          if (t.image == s.image) {
            throw std::invalid_argument(std::string(what) + " sample " + s.id + " duplicates test image " + t.id);
          }
        }
      }
    }
  };
  check_disjoint(real_train, "training");
  check_disjoint(synth, "synthetic");
  check_disjoint(control_real, "control");

  const std::pair<const char*, std::span<const core::PairedSample>> extras[] = {
      {"baseline", {}}, {"real+synthetic", synth}, {"real+control", control_real}};
  AugmentationReport report;
  for (const auto& [name, extra] : extras) {
    std::vector<core::PairedSample> arm(real_train.begin(), real_train.end());
    arm.insert(arm.end(), extra.begin(), extra.end());
    spdlog::info("segmentation arm {}: {} training pairs", name, arm.size());
    SegTrainResult trained = train_segmenter(arm, config);
    ArmResult r;
    r.name = name;
    r.config = config;
    r.n_train = arm.size();
    r.report = evaluate_segmenter(*trained.model, test);
    r.log = std::move(trained.log);
    report.arms.push_back(std::move(r));
  }

  const SegReport& base = report.arms[0].report;
  for (std::size_t k = 1; k < report.arms.size(); ++k) {
    const SegReport& r = report.arms[k].report;
    nlohmann::json d = {{"miou", r.miou - base.miou},
                        {"wiou", r.wiou - base.wiou},
                        {"wprecision", r.wprecision - base.wprecision},
                        {"wrecall", r.wrecall - base.wrecall}};
    if (base.miou > 0.0) d["miou_relative"] = (r.miou - base.miou) / base.miou;
    if (base.wprecision > 0.0) d["wprecision_relative"] = (r.wprecision - base.wprecision) / base.wprecision;
    if (std::isfinite(r.tobjective.value) && std::isfinite(base.tobjective.value)) {
      d["tobjective"] = r.tobjective.value - base.tobjective.value;
    }
    report.deltas[report.arms[k].name] = std::move(d);
  }
  return report;
}

nlohmann::json AugmentationReportToJson(const AugmentationReport& report) {
  nlohmann::json j;
  nlohmann::json arms = nlohmann::json::array();
  for (const ArmResult& a : report.arms) {
    arms.push_back({{"name", a.name}, {"n_train", a.n_train}, {"config", a.config}, {"report", SegReportToJson(a.report)},
                    {"final_loss", a.log.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.log.back().loss)}});
  }
  j["arms"] = std::move(arms);
  j["deltas"] = report.deltas;
  return j;
}

void SaveSegmenter(const UNetPlusPlus<float>& model, const std::filesystem::path& path) {
  auto& mutable_model = const_cast<UNetPlusPlus<float>&>(model);
  const nn::ParameterList<float> params = mutable_model.Parameters();
  nlohmann::json header;
  header["config"] = model.config();
  nlohmann::json tensors = nlohmann::json::array();
  for (const nn::Parameter<float>* p : params) tensors.push_back({{"name", p->name}, {"shape", p->shape}});
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write segmenter checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const nn::Parameter<float>* p : params) {
      out.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed writing segmenter checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<UNetPlusPlus<float>> LoadSegmenter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open segmenter checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a segmenter checkpoint");
  }
  if (version != kVersion) throw std::runtime_error("unsupported segmenter checkpoint version " + std::to_string(version));
  if (len > (1u << 26)) throw std::runtime_error("segmenter checkpoint header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt segmenter checkpoint header: " + std::string(e.what()));
  }
  auto model = std::make_unique<UNetPlusPlus<float>>(header.at("config").get<SegmenterConfig>());
  const nn::ParameterList<float> params = model->Parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw std::runtime_error("segmenter checkpoint tensor count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (tensors[k].at("name").get<std::string>() != params[k]->name ||
        tensors[k].at("shape").get<std::vector<int>>() != params[k]->shape) {
      throw std::runtime_error("segmenter checkpoint tensor " + std::to_string(k) + " does not match the model");
    }
    in.read(reinterpret_cast<char*>(params[k]->value.data()),
            static_cast<std::streamsize>(params[k]->value.size() * sizeof(float)));
  }
  if (!in) throw std::runtime_error("truncated segmenter checkpoint " + path.string());
  return model;
}

template Tensor<float> Softmax(const Tensor<float>&);
template Tensor<double> Softmax(const Tensor<double>&);
template SegLoss<float> SegmentationLoss(const Tensor<float>&, const core::LabelGrid&, double);
template SegLoss<double> SegmentationLoss(const Tensor<double>&, const core::LabelGrid&, double);

}  // namespace histosynth::seg
