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

// Minimal single-sample layers with hand-written backward passes. Training
// calls Forward() (which caches what Backward() needs); Infer() is const and
// keeps no state, so a frozen network can be shared across threads.

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "histosynth/nn/tensor.h"

namespace histosynth::nn {

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }
  void ZeroGrad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> Infer(const Tensor<T>& x) const = 0;
  virtual Tensor<T> Forward(const Tensor<T>& x) = 0;
  /// Gradient w.r.t. the last Forward() input. Parameter gradients are
  /// accumulated unless disabled. May be called more than once per Forward().
  virtual Tensor<T> Backward(const Tensor<T>& grad_out) = 0;
  virtual void CollectParameters(ParameterList<T>& out) { (void)out; }
  virtual void SetParamGradEnabled(bool enabled) { param_grad_enabled_ = enabled; }
  virtual std::string Name() const = 0;

 protected:
  bool param_grad_enabled_ = true;
};

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

enum class PadMode { kZero, kReflect };

/// Output extent of a convolution along one axis.
constexpr int ConvOutputSize(int input, int kernel, int stride, int padding) {
  return (input + 2 * padding - kernel) / stride + 1;
}

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0,
         PadMode pad_mode = PadMode::kZero, bool bias = true, std::string name = "conv");

  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  void CollectParameters(ParameterList<T>& out) override;
  std::string Name() const override { return weight_.name; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  Tensor<T> Compute(const Tensor<T>& x, std::vector<T>& cols) const;

  int in_channels_;
  int out_channels_;
  int kernel_;
  int stride_;
  int padding_;
  PadMode pad_mode_;
  bool has_bias_;
  Parameter<T> weight_;  // [out, in * k * k]
  Parameter<T> bias_;    // [out]
  std::vector<T> cols_;
  int in_h_ = 0;
  int in_w_ = 0;
};

/// Fractionally-strided convolution; the adjoint of Conv2d with the same
/// kernel, stride and (zero) padding.
template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding,
                  int output_padding, bool bias = true, std::string name = "convT");

  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  void CollectParameters(ParameterList<T>& out) override;
  std::string Name() const override { return weight_.name; }

  Parameter<T>& weight() { return weight_; }

 private:
  int in_channels_;
  int out_channels_;
  int kernel_;
  int stride_;
  int padding_;
  int output_padding_;
  bool has_bias_;
  Parameter<T> weight_;  // [in, out * k * k]
  Parameter<T> bias_;    // [out]
  Tensor<T> input_;
};

/// Per-channel normalisation without affine parameters.
template <typename T>
class InstanceNorm final : public Layer<T> {
 public:
  explicit InstanceNorm(T eps = T(1e-5)) : eps_(eps) {}
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  std::string Name() const override { return "instance_norm"; }

 private:
  T eps_;
  Tensor<T> normalized_;
  std::vector<T> inv_std_;
};

enum class Activation { kRelu, kLeakyRelu, kTanh, kSigmoid };

template <typename T>
class Activate final : public Layer<T> {
 public:
  explicit Activate(Activation kind, T slope = T(0.2)) : kind_(kind), slope_(slope) {}
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  std::string Name() const override { return "activation"; }

 private:
  Activation kind_;
  T slope_;
  Tensor<T> input_;
  Tensor<T> output_;
};

/// 2x2 mean pooling with stride 2 (odd trailing rows/columns are dropped).
template <typename T>
class AvgPool2 final : public Layer<T> {
 public:
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  std::string Name() const override { return "avg_pool2"; }

 private:
  int in_h_ = 0;
  int in_w_ = 0;
};

template <typename T>
class MaxPool2 final : public Layer<T> {
 public:
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  std::string Name() const override { return "max_pool2"; }

 private:
  int in_c_ = 0;
  int in_h_ = 0;
  int in_w_ = 0;
  std::vector<std::size_t> argmax_;
};

/// Nearest-neighbour 2x upsampling.
template <typename T>
class Upsample2 final : public Layer<T> {
 public:
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override { return Infer(x); }
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  std::string Name() const override { return "upsample2"; }
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  Sequential() = default;
  explicit Sequential(std::string name) : name_(std::move(name)) {}

  Sequential& Add(LayerPtr<T> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  template <typename L, typename... Args>
  L& Emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  void CollectParameters(ParameterList<T>& out) override;
  void SetParamGradEnabled(bool enabled) override;
  std::string Name() const override { return name_; }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::string name_ = "sequential";
  std::vector<LayerPtr<T>> layers_;
};

/// y = x + body(x).
template <typename T>
class Residual final : public Layer<T> {
 public:
  explicit Residual(std::unique_ptr<Sequential<T>> body) : body_(std::move(body)) {}
  Tensor<T> Infer(const Tensor<T>& x) const override;
  Tensor<T> Forward(const Tensor<T>& x) override;
  Tensor<T> Backward(const Tensor<T>& grad_out) override;
  void CollectParameters(ParameterList<T>& out) override { body_->CollectParameters(out); }
  void SetParamGradEnabled(bool enabled) override { body_->SetParamGradEnabled(enabled); }
  std::string Name() const override { return "residual"; }

 private:
  std::unique_ptr<Sequential<T>> body_;
};

/// Draws every weight from N(0, std) and zeroes biases (parameters whose name
/// ends in ".bias").
template <typename T>
void InitNormal(const ParameterList<T>& params, double std, std::mt19937_64& rng);

template <typename T>
std::size_t CountParameters(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const Parameter<T>* p : params) n += p->value.size();
  return n;
}

template <typename T>
void ZeroGrad(const ParameterList<T>& params) {
  for (Parameter<T>* p : params) p->ZeroGrad();
}

template <typename T>
void AddInPlace(Tensor<T>& acc, const Tensor<T>& x) {
  if (!acc.SameShape(x)) {
    throw std::invalid_argument("shape mismatch: " + acc.ShapeString() + " vs " + x.ShapeString());
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += x.data[i];
}

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class ConvTranspose2d<float>;
extern template class ConvTranspose2d<double>;
extern template class InstanceNorm<float>;
extern template class InstanceNorm<double>;
extern template class Activate<float>;
extern template class Activate<double>;
extern template class AvgPool2<float>;
extern template class AvgPool2<double>;
extern template class MaxPool2<float>;
extern template class MaxPool2<double>;
extern template class Upsample2<float>;
extern template class Upsample2<double>;
extern template class Sequential<float>;
extern template class Sequential<double>;
extern template class Residual<float>;
extern template class Residual<double>;

}  // namespace histosynth::nn
