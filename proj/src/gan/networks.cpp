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
#include "histosynth/gan/networks.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace histosynth::gan {
namespace {

constexpr int kDiscKernel = 4;
constexpr int kDiscPad = 2;
constexpr int kMaxDiscChannels = 512;

}  // namespace

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config) : config_(config) {
  config.Validate();
  using nn::Activate;
  using nn::Activation;
  using nn::Conv2d;
  using nn::InstanceNorm;
  using nn::PadMode;
  const int ngf = config.base_channels;

  net_.template Emplace<Conv2d<T>>(config.input_labels, ngf, 7, 1, 3, PadMode::kReflect, true, "g.stem");
  net_.template Emplace<InstanceNorm<T>>();
  net_.template Emplace<Activate<T>>(Activation::kRelu);

  int ch = ngf;
  for (int i = 0; i < config.n_downsample; ++i) {
    net_.template Emplace<Conv2d<T>>(ch, ch * 2, 3, 2, 1, PadMode::kZero, true,
                            "g.down" + std::to_string(i));
    net_.template Emplace<InstanceNorm<T>>();
    net_.template Emplace<Activate<T>>(Activation::kRelu);
    ch *= 2;
  }
  for (int i = 0; i < config.n_resblocks; ++i) {
    auto body = std::make_unique<nn::Sequential<T>>("g.res" + std::to_string(i));
    const std::string prefix = "g.res" + std::to_string(i);
    body->template Emplace<Conv2d<T>>(ch, ch, 3, 1, 1, PadMode::kReflect, true, prefix + ".conv0");
    body->template Emplace<InstanceNorm<T>>();
    body->template Emplace<Activate<T>>(Activation::kRelu);
    body->template Emplace<Conv2d<T>>(ch, ch, 3, 1, 1, PadMode::kReflect, true, prefix + ".conv1");
    body->template Emplace<InstanceNorm<T>>();
    net_.template Emplace<nn::Residual<T>>(std::move(body));
  }
  for (int i = 0; i < config.n_downsample; ++i) {
    net_.template Emplace<nn::ConvTranspose2d<T>>(ch, ch / 2, 3, 2, 1, 1, true,
                                         "g.up" + std::to_string(i));
    net_.template Emplace<InstanceNorm<T>>();
    net_.template Emplace<Activate<T>>(Activation::kRelu);
    ch /= 2;
  }
  net_.template Emplace<Conv2d<T>>(ch, config.output_channels, 7, 1, 3, PadMode::kReflect, true, "g.head");
  net_.template Emplace<Activate<T>>(Activation::kTanh);
}

template <typename T>
void Generator<T>::CheckInput(const nn::Tensor<T>& labels) const {
  if (labels.channels != config_.input_labels) {
    throw std::invalid_argument("generator expects " + std::to_string(config_.input_labels) +
                                " label channels, got " + labels.ShapeString());
  }
  const int factor = 1 << config_.n_downsample;
  if (labels.height % factor != 0 || labels.width % factor != 0 || labels.height < factor * 4 ||
      labels.width < factor * 4) {
    throw std::invalid_argument("generator input " + labels.ShapeString() +
                                " must be divisible by " + std::to_string(factor) +
                                " and at least " + std::to_string(factor * 4) + " pixels");
  }
}

template <typename T>
nn::Tensor<T> Generator<T>::Infer(const nn::Tensor<T>& labels) const {
  CheckInput(labels);
  return net_.Infer(labels);
}

template <typename T>
nn::Tensor<T> Generator<T>::Forward(const nn::Tensor<T>& labels) {
  CheckInput(labels);
  return net_.Forward(labels);
}

template <typename T>
nn::Tensor<T> Generator<T>::Backward(const nn::Tensor<T>& grad_image) {
  return net_.Backward(grad_image);
}

template <typename T>
nn::ParameterList<T> Generator<T>::Parameters() {
  nn::ParameterList<T> out;
  net_.CollectParameters(out);
  return out;
}

template <typename T>
PatchDiscriminator<T>::PatchDiscriminator(int in_channels, const DiscriminatorConfig& config,
                                          int scale_index) {
  using nn::Activate;
  using nn::Activation;
  using nn::Conv2d;
  using nn::InstanceNorm;
  using nn::PadMode;
  const std::string prefix = "d" + std::to_string(scale_index);
  int nf = config.base_channels;

  auto first = std::make_unique<nn::Sequential<T>>(prefix + ".block0");
  first->template Emplace<Conv2d<T>>(in_channels, nf, kDiscKernel, 2, kDiscPad, PadMode::kZero,
                                     true, prefix + ".conv0");
  first->template Emplace<Activate<T>>(Activation::kLeakyRelu, T(0.2));
  blocks_.push_back(std::move(first));

  for (int n = 1; n <= config.n_layers; ++n) {
    const int prev = nf;
    nf = std::min(nf * 2, kMaxDiscChannels);
    const int stride = n < config.n_layers ? 2 : 1;
    auto block = std::make_unique<nn::Sequential<T>>(prefix + ".block" + std::to_string(n));
    block->template Emplace<Conv2d<T>>(prev, nf, kDiscKernel, stride, kDiscPad, PadMode::kZero,
                                       true, prefix + ".conv" + std::to_string(n));
    block->template Emplace<InstanceNorm<T>>();
    block->template Emplace<Activate<T>>(Activation::kLeakyRelu, T(0.2));
    blocks_.push_back(std::move(block));
  }

  auto head = std::make_unique<nn::Sequential<T>>(prefix + ".head");
  head->template Emplace<Conv2d<T>>(nf, 1, kDiscKernel, 1, kDiscPad, PadMode::kZero, true,
                                    prefix + ".score");
  blocks_.push_back(std::move(head));
}

template <typename T>
nn::Tensor<T> PatchDiscriminator<T>::Infer(const nn::Tensor<T>& x,
                                           std::vector<nn::Tensor<T>>* features) const {
  nn::Tensor<T> h = x;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b]->Infer(h);
    if (features != nullptr && b + 1 < blocks_.size()) features->push_back(h);
  }
  return h;
}

template <typename T>
nn::Tensor<T> PatchDiscriminator<T>::Forward(const nn::Tensor<T>& x,
                                             std::vector<nn::Tensor<T>>* features) {
  nn::Tensor<T> h = x;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b]->Forward(h);
    if (features != nullptr && b + 1 < blocks_.size()) features->push_back(h);
  }
  return h;
}

template <typename T>
nn::Tensor<T> PatchDiscriminator<T>::Backward(const nn::Tensor<T>& grad_score,
                                              const std::vector<nn::Tensor<T>>& grad_features) {
  nn::Tensor<T> g = blocks_.back()->Backward(grad_score);
  for (std::size_t b = blocks_.size() - 1; b-- > 0;) {
    if (b < grad_features.size() && !grad_features[b].empty()) nn::AddInPlace(g, grad_features[b]);
    g = blocks_[b]->Backward(g);
  }
  return g;
}

template <typename T>
nn::ParameterList<T> PatchDiscriminator<T>::Parameters() {
  nn::ParameterList<T> out;
  for (auto& b : blocks_) b->CollectParameters(out);
  return out;
}

template <typename T>
void PatchDiscriminator<T>::SetParamGradEnabled(bool enabled) {
  for (auto& b : blocks_) b->SetParamGradEnabled(enabled);
}

template <typename T>
MultiscaleDiscriminator<T>::MultiscaleDiscriminator(int in_channels,
                                                    const DiscriminatorConfig& config)
    : config_(config), in_channels_(in_channels) {
  config.Validate();
  for (int k = 0; k < config.n_scales; ++k) {
    scales_.push_back(std::make_unique<PatchDiscriminator<T>>(in_channels, config, k));
  }
  pools_.resize(static_cast<std::size_t>(std::max(0, config.n_scales - 1)));
}

template <typename T>
nn::Tensor<T> MultiscaleDiscriminator<T>::Downsample(const nn::Tensor<T>& x, int times) {
  nn::AvgPool2<T> pool;
  nn::Tensor<T> h = x;
  for (int i = 0; i < times; ++i) h = pool.Infer(h);
  return h;
}

template <typename T>
DiscriminatorOutput<T> MultiscaleDiscriminator<T>::Infer(const nn::Tensor<T>& x) const {
  if (x.channels != in_channels_) {
    throw std::invalid_argument("discriminator expects " + std::to_string(in_channels_) +
                                " channels, got " + x.ShapeString());
  }
  DiscriminatorOutput<T> out;
  out.features.resize(scales_.size());
  nn::Tensor<T> h = x;
  nn::AvgPool2<T> pool;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) h = pool.Infer(h);
    out.scores.push_back(scales_[k]->Infer(h, &out.features[k]));
  }
  return out;
}

template <typename T>
DiscriminatorOutput<T> MultiscaleDiscriminator<T>::Forward(const nn::Tensor<T>& x) {
  if (x.channels != in_channels_) {
    throw std::invalid_argument("discriminator expects " + std::to_string(in_channels_) +
                                " channels, got " + x.ShapeString());
  }
  DiscriminatorOutput<T> out;
  out.features.resize(scales_.size());
  nn::Tensor<T> h = x;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) h = pools_[k - 1].Forward(h);
    out.scores.push_back(scales_[k]->Forward(h, &out.features[k]));
  }
  return out;
}

template <typename T>
nn::Tensor<T> MultiscaleDiscriminator<T>::Backward(
    const std::vector<nn::Tensor<T>>& grad_scores,
    const std::vector<std::vector<nn::Tensor<T>>>& grad_features) {
  if (grad_scores.size() != scales_.size()) {
    throw std::invalid_argument("one score gradient per discriminator scale is required");
  }
  static const std::vector<nn::Tensor<T>> kNone;
  nn::Tensor<T> carry;
  for (std::size_t k = scales_.size(); k-- > 0;) {
    const auto& gf = k < grad_features.size() ? grad_features[k] : kNone;
    nn::Tensor<T> g = scales_[k]->Backward(grad_scores[k], gf);
    if (!carry.empty()) nn::AddInPlace(g, carry);
    carry = k > 0 ? pools_[k - 1].Backward(g) : g;
  }
  return carry;
}

template <typename T>
nn::ParameterList<T> MultiscaleDiscriminator<T>::Parameters() {
  nn::ParameterList<T> out;
  for (auto& s : scales_) {
    auto p = s->Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
void MultiscaleDiscriminator<T>::SetParamGradEnabled(bool enabled) {
  for (auto& s : scales_) s->SetParamGradEnabled(enabled);
}

std::vector<std::pair<int, int>> PatchDiscriminatorShapes(const DiscriminatorConfig& config,
                                                          int height, int width) {
  std::vector<std::pair<int, int>> shapes;
  int h = nn::ConvOutputSize(height, kDiscKernel, 2, kDiscPad);
  int w = nn::ConvOutputSize(width, kDiscKernel, 2, kDiscPad);
  shapes.emplace_back(h, w);
  for (int n = 1; n <= config.n_layers; ++n) {
    const int stride = n < config.n_layers ? 2 : 1;
    h = nn::ConvOutputSize(h, kDiscKernel, stride, kDiscPad);
    w = nn::ConvOutputSize(w, kDiscKernel, stride, kDiscPad);
    shapes.emplace_back(h, w);
  }
  shapes.emplace_back(nn::ConvOutputSize(h, kDiscKernel, 1, kDiscPad),
                      nn::ConvOutputSize(w, kDiscKernel, 1, kDiscPad));
  return shapes;
}

template class Generator<float>;
template class Generator<double>;
template class PatchDiscriminator<float>;
template class PatchDiscriminator<double>;
template class MultiscaleDiscriminator<float>;
template class MultiscaleDiscriminator<double>;

}  // namespace histosynth::gan
