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
#include "histosynth/seg/unetpp.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace histosynth::seg {

using nn::Tensor;

void SegmenterConfig::Validate() const {
  if (input_channels < 1) throw std::invalid_argument("segmenter needs at least one input channel");
  if (n_classes < 2) throw std::invalid_argument("segmenter needs at least two classes");
  if (depth < 1 || depth > 6) throw std::invalid_argument("segmenter depth must be in [1, 6]");
  if (base_channels < 1) throw std::invalid_argument("segmenter base_channels must be positive");
}

void to_json(nlohmann::json& j, const SegmenterConfig& c) {
  j = {{"input_channels", c.input_channels},
       {"n_classes", c.n_classes},
       {"depth", c.depth},
       {"base_channels", c.base_channels}};
}

void from_json(const nlohmann::json& j, SegmenterConfig& c) {
  c.input_channels = j.at("input_channels").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.depth = j.at("depth").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.Validate();
}

namespace {

template <typename T>
std::unique_ptr<nn::Sequential<T>> ConvBlock(int in, int out, const std::string& name) {
  auto s = std::make_unique<nn::Sequential<T>>(name);
  s->template Emplace<nn::Conv2d<T>>(in, out, 3, 1, 1, nn::PadMode::kZero, true, name + ".conv0");
  s->template Emplace<nn::InstanceNorm<T>>();
  s->template Emplace<nn::Activate<T>>(nn::Activation::kLeakyRelu, T(0.1));
  s->template Emplace<nn::Conv2d<T>>(out, out, 3, 1, 1, nn::PadMode::kZero, true, name + ".conv1");
  s->template Emplace<nn::InstanceNorm<T>>();
  s->template Emplace<nn::Activate<T>>(nn::Activation::kLeakyRelu, T(0.1));
  return s;
}

}  // namespace

template <typename T>
UNetPlusPlus<T>::UNetPlusPlus(const SegmenterConfig& config) : config_(config) {
  config_.Validate();
  const int d = config_.depth;
  nodes_.resize(static_cast<std::size_t>((d + 1) * (d + 1)));
  auto width = [&](int level) { return config_.base_channels << level; };
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; i + j <= d; ++j) {
      Node& n = node(i, j);
      const std::string name = "seg.x" + std::to_string(i) + std::to_string(j);
      if (j == 0) {
        const int in = i == 0 ? config_.input_channels : width(i - 1);
        n.input_channels = {in};
        if (i > 0) n.pool = std::make_unique<nn::MaxPool2<T>>();
      } else {
        for (int k = 0; k < j; ++k) n.input_channels.push_back(width(i));
        n.input_channels.push_back(width(i + 1));
        n.upsample = std::make_unique<nn::Upsample2<T>>();
      }
      int in_total = 0;
      for (int c : n.input_channels) in_total += c;
      n.block = ConvBlock<T>(in_total, width(i), name);
    }
  }
  head_ = std::make_unique<nn::Conv2d<T>>(width(0), config_.n_classes, 1, 1, 0, nn::PadMode::kZero, true, "seg.head");
}

template <typename T>
void UNetPlusPlus<T>::CheckInput(const Tensor<T>& image) const {
  const int factor = 1 << config_.depth;
  if (image.channels != config_.input_channels) {
    throw std::invalid_argument("segmenter expects " + std::to_string(config_.input_channels) + " channels, got " +
                                image.ShapeString());
  }
  if (image.height % factor != 0 || image.width % factor != 0 || image.height < factor || image.width < factor) {
    throw std::invalid_argument("segmenter input " + image.ShapeString() + " must be a positive multiple of " +
                                std::to_string(factor) + " in both dimensions");
  }
}

template <typename T>
template <bool kTrain>
Tensor<T> UNetPlusPlus<T>::Run(const Tensor<T>& image) {
  CheckInput(image);
  const int d = config_.depth;
  std::vector<Tensor<T>> x(nodes_.size());
  auto at = [&](int i, int j) -> Tensor<T>& { return x[static_cast<std::size_t>(i * (d + 1) + j)]; };
  auto apply = [&](nn::Layer<T>& layer, const Tensor<T>& in) {
    if constexpr (kTrain) return layer.Forward(in);
    else return static_cast<const nn::Layer<T>&>(layer).Infer(in);
  };
  // Column-major traversal keeps every dependency computed before use.
  for (int j = 0; j <= d; ++j) {
    for (int i = 0; i + j <= d; ++i) {
      Node& n = node(i, j);
      Tensor<T> in;
      if (j == 0) {
        in = i == 0 ? image : apply(*n.pool, at(i - 1, 0));
      } else {
        in = at(i, 0);
        for (int k = 1; k < j; ++k) in = nn::Concat(in, at(i, k));
        in = nn::Concat(in, apply(*n.upsample, at(i + 1, j - 1)));
      }
      at(i, j) = apply(*n.block, in);
    }
  }
  return apply(*head_, at(0, d));
}

template <typename T>
Tensor<T> UNetPlusPlus<T>::Infer(const Tensor<T>& image) const {
  return const_cast<UNetPlusPlus<T>*>(this)->template Run<false>(image);
}

template <typename T>
Tensor<T> UNetPlusPlus<T>::Forward(const Tensor<T>& image) {
  return Run<true>(image);
}

template <typename T>
Tensor<T> UNetPlusPlus<T>::Backward(const Tensor<T>& grad_logits) {
  const int d = config_.depth;
  std::vector<Tensor<T>> g(nodes_.size());
  auto grad = [&](int i, int j) -> Tensor<T>& { return g[static_cast<std::size_t>(i * (d + 1) + j)]; };
  auto accumulate = [](Tensor<T>& acc, const Tensor<T>& v) {
    if (acc.data.empty()) acc = v;
    else nn::AddInPlace(acc, v);
  };
  grad(0, d) = head_->Backward(grad_logits);
  Tensor<T> grad_image;
  for (int j = d; j >= 0; --j) {
    for (int i = d - j; i >= 0; --i) {
      Node& n = node(i, j);
      const Tensor<T> gin = n.block->Backward(grad(i, j));
      if (j == 0) {
        if (i == 0) grad_image = gin;
        else accumulate(grad(i - 1, 0), n.pool->Backward(gin));
        continue;
      }
      int offset = 0;
      for (int k = 0; k < j; ++k) {
        accumulate(grad(i, k), nn::SliceChannels(gin, offset, n.input_channels[static_cast<std::size_t>(k)]));
        offset += n.input_channels[static_cast<std::size_t>(k)];
      }
      accumulate(grad(i + 1, j - 1), n.upsample->Backward(nn::SliceChannels(gin, offset, n.input_channels.back())));
    }
  }
  return grad_image;
}

template <typename T>
nn::ParameterList<T> UNetPlusPlus<T>::Parameters() {
  nn::ParameterList<T> out;
  const int d = config_.depth;
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; i + j <= d; ++j) node(i, j).block->CollectParameters(out);
  }
  head_->CollectParameters(out);
  return out;
}

template <typename T>
void InitHe(const nn::ParameterList<T>& params, std::mt19937_64& rng) {
  for (nn::Parameter<T>* p : params) {
    const bool is_bias = p->name.size() >= 5 && p->name.compare(p->name.size() - 5, 5, ".bias") == 0;
    if (is_bias) {
      std::fill(p->value.begin(), p->value.end(), T(0));
      continue;
    }
    const double fan_in = p->shape.size() >= 2 ? static_cast<double>(p->shape[1]) : 1.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (T& v : p->value) v = static_cast<T>(normal(rng));
  }
}

template class UNetPlusPlus<float>;
template class UNetPlusPlus<double>;
template void InitHe<float>(const nn::ParameterList<float>&, std::mt19937_64&);
template void InitHe<double>(const nn::ParameterList<double>&, std::mt19937_64&);

}  // namespace histosynth::seg
