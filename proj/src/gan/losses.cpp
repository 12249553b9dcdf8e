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
#include "histosynth/gan/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace histosynth::gan {
namespace {

constexpr double kProbClamp = 1e-12;

double Softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
void CheckAligned(const std::vector<std::vector<nn::Tensor<T>>>& a,
                  const std::vector<std::vector<nn::Tensor<T>>>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("feature sets differ in scale count");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) {
      throw std::invalid_argument("feature sets differ in layer count at scale " +
                                  std::to_string(k));
    }
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      if (!a[k][i].SameShape(b[k][i])) {
        throw std::invalid_argument("feature shapes differ at scale " + std::to_string(k) +
                                    ", layer " + std::to_string(i));
      }
    }
  }
}

}  // namespace

double gan_loss(const std::vector<std::vector<double>>& scores, Target target, ScoreLoss mode) {
  if (scores.empty()) throw std::invalid_argument("gan_loss: empty score set");
  const double t = target == Target::kReal ? 1.0 : 0.0;
  double total = 0.0;
  for (const auto& scale : scores) {
    if (scale.empty()) throw std::invalid_argument("gan_loss: empty scale");
    double sum = 0.0;
    for (double s : scale) {
      if (!std::isfinite(s)) throw std::invalid_argument("gan_loss: non-finite score");
      if (mode == ScoreLoss::kLsgan) {
        sum += (s - t) * (s - t);
      } else {
        const double p = std::clamp(s, kProbClamp, 1.0 - kProbClamp);
        sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
      }
    }
    total += sum / static_cast<double>(scale.size());
  }
  return total / static_cast<double>(scores.size());
}

template <typename T>
double feature_matching_loss(const std::vector<std::vector<nn::Tensor<T>>>& real_features,
                             const std::vector<std::vector<nn::Tensor<T>>>& fake_features) {
  return FeatureMatchingLoss<T>(real_features, fake_features, 1.0, nullptr);
}

double total_generator_objective(double adv, double fm, double lambda_fm) {
  return adv + lambda_fm * fm;
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
  const int total = config.total_epochs();
  if (epoch < 0 || epoch > total) {
    throw std::out_of_range("epoch " + std::to_string(epoch) + " is outside the schedule [0, " +
                            std::to_string(total) + "]");
  }
  if (epoch < config.epochs_constant) return config.lr;
  if (config.epochs_decay == 0) return epoch >= total ? 0.0 : config.lr;
  const double progress =
      static_cast<double>(epoch - config.epochs_constant) / static_cast<double>(config.epochs_decay);
  return config.lr * (1.0 - progress);
}

Criterion DiscriminatorCriterion(GanLossMode mode) {
  switch (mode) {
    case GanLossMode::kMseDBceG:
      return Criterion::kMseOfProbability;
    case GanLossMode::kLsgan:
      return Criterion::kMseOfScore;
    case GanLossMode::kBce:
      return Criterion::kBinaryCrossEntropy;
  }
  return Criterion::kMseOfProbability;
}

Criterion GeneratorCriterion(GanLossMode mode) {
  return mode == GanLossMode::kLsgan ? Criterion::kMseOfScore : Criterion::kBinaryCrossEntropy;
}

template <typename T>
double AdversarialLoss(const std::vector<nn::Tensor<T>>& logits, Target target,
                       Criterion criterion, std::vector<nn::Tensor<T>>* grads) {
  if (logits.empty()) throw std::invalid_argument("AdversarialLoss: no scores");
  const double t = target == Target::kReal ? 1.0 : 0.0;
  const double inv_scales = 1.0 / static_cast<double>(logits.size());
  if (grads != nullptr) grads->clear();
  double total = 0.0;
  for (const nn::Tensor<T>& s : logits) {
    if (s.empty()) throw std::invalid_argument("AdversarialLoss: empty score map");
    const double inv_n = 1.0 / static_cast<double>(s.size());
    nn::Tensor<T> g(s.channels, s.height, s.width);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = static_cast<double>(s.data[i]);
      double loss = 0.0;
      double dx = 0.0;
      switch (criterion) {
        case Criterion::kMseOfProbability: {
          const double p = Sigmoid(x);
          loss = (p - t) * (p - t);
          dx = 2.0 * (p - t) * p * (1.0 - p);
          break;
        }
        case Criterion::kMseOfScore:
          loss = (x - t) * (x - t);
          dx = 2.0 * (x - t);
          break;
        case Criterion::kBinaryCrossEntropy:
          loss = t > 0.5 ? Softplus(-x) : Softplus(x);
          dx = Sigmoid(x) - t;
          break;
      }
      sum += loss;
      g.data[i] = static_cast<T>(dx * inv_n * inv_scales);
    }
    total += sum * inv_n;
    if (grads != nullptr) grads->push_back(std::move(g));
  }
  return total * inv_scales;
}

template <typename T>
double FeatureMatchingLoss(const std::vector<std::vector<nn::Tensor<T>>>& real_features,
                           const std::vector<std::vector<nn::Tensor<T>>>& fake_features,
                           double weight, std::vector<std::vector<nn::Tensor<T>>>* grads) {
  CheckAligned(real_features, fake_features);
  if (grads != nullptr) grads->assign(fake_features.size(), {});
  double total = 0.0;
  for (std::size_t k = 0; k < fake_features.size(); ++k) {
    for (std::size_t i = 0; i < fake_features[k].size(); ++i) {
      const nn::Tensor<T>& r = real_features[k][i];
      const nn::Tensor<T>& f = fake_features[k][i];
      if (f.empty()) throw std::invalid_argument("FeatureMatchingLoss: empty feature map");
      const double inv_n = 1.0 / static_cast<double>(f.size());
      double sum = 0.0;
      nn::Tensor<T> g(f.channels, f.height, f.width);
      const T step = static_cast<T>(weight * inv_n);
      for (std::size_t e = 0; e < f.size(); ++e) {
        const double d = static_cast<double>(f.data[e]) - static_cast<double>(r.data[e]);
        sum += std::abs(d);
        g.data[e] = d > 0.0 ? step : (d < 0.0 ? -step : T(0));
      }
      total += sum * inv_n;
      if (grads != nullptr) (*grads)[k].push_back(std::move(g));
    }
  }
  return weight * total;
}

template double feature_matching_loss<float>(const std::vector<std::vector<nn::Tensor<float>>>&,
                                             const std::vector<std::vector<nn::Tensor<float>>>&);
template double feature_matching_loss<double>(const std::vector<std::vector<nn::Tensor<double>>>&,
                                              const std::vector<std::vector<nn::Tensor<double>>>&);
template double AdversarialLoss<float>(const std::vector<nn::Tensor<float>>&, Target, Criterion,
                                       std::vector<nn::Tensor<float>>*);
template double AdversarialLoss<double>(const std::vector<nn::Tensor<double>>&, Target, Criterion,
                                        std::vector<nn::Tensor<double>>*);
template double FeatureMatchingLoss<float>(const std::vector<std::vector<nn::Tensor<float>>>&,
                                           const std::vector<std::vector<nn::Tensor<float>>>&,
                                           double, std::vector<std::vector<nn::Tensor<float>>>*);
template double FeatureMatchingLoss<double>(const std::vector<std::vector<nn::Tensor<double>>>&,
                                            const std::vector<std::vector<nn::Tensor<double>>>&,
                                            double, std::vector<std::vector<nn::Tensor<double>>>*);

}  // namespace histosynth::gan
