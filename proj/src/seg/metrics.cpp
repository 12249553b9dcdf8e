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
#include "histosynth/seg/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace histosynth::seg {
namespace {

double Ratio(std::uint64_t num, std::uint64_t den, bool absent) {
  if (den == 0) return absent ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

bool Absent(const ClassCounts& c) { return c.tp == 0 && c.fp == 0 && c.fn == 0; }

template <typename F>
double Weighted(const ConfusionTensor& ct, F metric) {
  if (ct.n_images() == 0) throw std::invalid_argument("confusion tensor holds no images");
  double total = 0.0;
  for (std::size_t i = 0; i < ct.n_images(); ++i) {
    const double s = static_cast<double>(ct.pixels(i));
    double acc = 0.0;
    for (const ClassCounts& c : ct.counts[i]) acc += static_cast<double>(c.support()) / s * metric(c);
    total += acc;
  }
  return total / static_cast<double>(ct.n_images());
}

int LabelIndex(core::ClassId id, int n_classes) {
  const int v = static_cast<int>(id);
  if (v >= n_classes) {
    throw std::out_of_range("label " + std::to_string(v) + " outside " + std::to_string(n_classes) + " classes");
  }
  return v;
}

}  // namespace

std::uint64_t ConfusionTensor::pixels(std::size_t image) const {
  const ClassCounts& c = counts.at(image).front();
  return c.tp + c.fp + c.fn + c.tn;
}

std::vector<ClassCounts> ConfusionTensor::Totals() const {
  std::vector<ClassCounts> t(static_cast<std::size_t>(n_classes));
  for (const auto& image : counts) {
    for (int c = 0; c < n_classes; ++c) {
      t[c].tp += image[c].tp;
      t[c].fp += image[c].fp;
      t[c].fn += image[c].fn;
      t[c].tn += image[c].tn;
    }
  }
  return t;
}

void ConfusionTensor::Append(const ConfusionTensor& other) {
  if (other.n_classes != n_classes) throw std::invalid_argument("class counts differ");
  counts.insert(counts.end(), other.counts.begin(), other.counts.end());
}

ConfusionTensor confusion(const core::LabelGrid& pred, const core::LabelGrid& gt, int n_classes) {
  if (n_classes < 1 || n_classes > core::kNumLabels) throw std::invalid_argument("bad class count");
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw std::invalid_argument("prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                                " does not match ground truth " + std::to_string(gt.width()) + "x" +
                                std::to_string(gt.height()));
  }
  // p[c][t]: pixels of true class c predicted as t.
  std::vector<std::uint64_t> p(static_cast<std::size_t>(n_classes) * n_classes, 0);
  const auto& pl = pred.labels();
  const auto& gl = gt.labels();
  for (std::size_t k = 0; k < gl.size(); ++k) {
    ++p[static_cast<std::size_t>(LabelIndex(gl[k], n_classes)) * n_classes + LabelIndex(pl[k], n_classes)];
  }
  const std::uint64_t total = gl.size();
  ConfusionTensor ct;
  ct.n_classes = n_classes;
  ct.counts.emplace_back(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    ClassCounts& cc = ct.counts[0][c];
    cc.tp = p[static_cast<std::size_t>(c) * n_classes + c];
    for (int t = 0; t < n_classes; ++t) {
      if (t == c) continue;
      cc.fn += p[static_cast<std::size_t>(c) * n_classes + t];
      cc.fp += p[static_cast<std::size_t>(t) * n_classes + c];
    }
    cc.tn = total - cc.tp - cc.fn - cc.fp;
  }
  return ct;
}

ConfusionTensor confusion(std::span<const core::LabelGrid> pred, std::span<const core::LabelGrid> gt,
                          int n_classes) {
  if (pred.size() != gt.size()) throw std::invalid_argument("prediction and ground-truth counts differ");
  ConfusionTensor ct;
  ct.n_classes = n_classes;
  for (std::size_t i = 0; i < pred.size(); ++i) ct.Append(confusion(pred[i], gt[i], n_classes));
  return ct;
}

double IoU(const ClassCounts& c) { return Ratio(c.tp, c.tp + c.fp + c.fn, Absent(c)); }
double Precision(const ClassCounts& c) { return Ratio(c.tp, c.tp + c.fp, Absent(c)); }
double Recall(const ClassCounts& c) { return Ratio(c.tp, c.tp + c.fn, Absent(c)); }
double Dice(const ClassCounts& c) { return Ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, Absent(c)); }

double miou(const ConfusionTensor& ct) {
  if (ct.n_images() == 0) throw std::invalid_argument("confusion tensor holds no images");
  double total = 0.0;
  for (const auto& image : ct.counts) {
    for (const ClassCounts& c : image) total += IoU(c);
  }
  return total / (static_cast<double>(ct.n_images()) * ct.n_classes);
}

double wiou(const ConfusionTensor& ct) { return Weighted(ct, IoU); }
double wprecision(const ConfusionTensor& ct) { return Weighted(ct, Precision); }
double wrecall(const ConfusionTensor& ct) { return Weighted(ct, Recall); }

TObjectiveResult tobjective(const ConfusionTensor& ct, std::span<const ProbabilityMap> probs,
                            std::span<const core::LabelGrid> gt, const TObjectiveOptions& options) {
  if (probs.size() != gt.size()) throw std::invalid_argument("probability and ground-truth counts differ");
  if (ct.n_images() == 0) throw std::invalid_argument("confusion tensor holds no images");
  TObjectiveResult r;
  double dice = 0.0;
  for (const ClassCounts& c : ct.Totals()) dice += Dice(c);
  r.mean_dice = dice / ct.n_classes;

  double nll = 0.0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const ProbabilityMap& p = probs[i];
    if (p.channels != ct.n_classes || p.width != gt[i].width() || p.height != gt[i].height()) {
      throw std::invalid_argument("probability map " + p.ShapeString() + " does not match ground truth " +
                                  std::to_string(i));
    }
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const int c = LabelIndex(gt[i].at(x, y), ct.n_classes);
        nll -= std::log(std::max(p.at(c, y, x), options.probability_floor));
        ++n;
      }
    }
  }
  r.cross_entropy = n > 0 ? nll / static_cast<double>(n) : 0.0;
  const double weight = options.ce_weight_one_over_classes ? 1.0 / ct.n_classes : 0.25;
  const double denom = r.mean_dice + weight * r.cross_entropy;
  if (denom == 0.0) {
    r.value = std::numeric_limits<double>::infinity();
    r.diagnostic = "zero denominator: mean Dice and cross-entropy are both zero";
  } else {
    r.value = 1.0 / denom;
  }
  return r;
}

}  // namespace histosynth::seg
