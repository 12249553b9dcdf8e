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
#include "histosynth/nn/layers.h"

#include <algorithm>
#include <limits>

#include <Eigen/Core>

namespace histosynth::nn {
namespace {

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;

inline int Reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

struct Geometry {
  int channels, in_h, in_w, kernel, stride, padding, out_h, out_w;
  PadMode pad_mode;
};

/// Unfolds patches into a (C*k*k) x (out_h*out_w) row-major matrix.
template <typename T>
void Im2Col(const T* input, const Geometry& g, T* cols) {
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    const T* in_c = input + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = cols + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          int iy = oy * g.stride - g.padding + ky;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            if (g.pad_mode == PadMode::kZero) {
              std::fill(dst, dst + g.out_w, T(0));
              continue;
            }
            iy = Reflect(iy, g.in_h);
          }
          const T* src = in_c + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            int ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= g.in_w) {
              if (g.pad_mode == PadMode::kZero) {
                dst[ox] = T(0);
                continue;
              }
              ix = Reflect(ix, g.in_w);
            }
            dst[ox] = src[ix];
          }
        }
      }
    }
  }
}

/// Adjoint of Im2Col: scatters (and sums) columns back into the image.
template <typename T>
void Col2Im(const T* cols, const Geometry& g, T* output) {
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  std::fill(output, output + static_cast<std::size_t>(g.channels) * g.in_h * g.in_w, T(0));
  for (int c = 0; c < g.channels; ++c) {
    T* out_c = output + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row =
            cols + (static_cast<std::size_t>(c * g.kernel + ky) * g.kernel + kx) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.in_h) {
            if (g.pad_mode == PadMode::kZero) continue;
            iy = Reflect(iy, g.in_h);
          }
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          T* dst = out_c + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            int ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= g.in_w) {
              if (g.pad_mode == PadMode::kZero) continue;
              ix = Reflect(ix, g.in_w);
            }
            dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding,
                  PadMode pad_mode, bool bias, std::string name)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      pad_mode_(pad_mode),
      has_bias_(bias),
      weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}),
      bias_(name + ".bias", {bias ? out_channels : 0}) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || padding < 0) {
    throw std::invalid_argument("invalid Conv2d geometry");
  }
}

template <typename T>
Tensor<T> Conv2d<T>::Compute(const Tensor<T>& x, std::vector<T>& cols) const {
  if (x.channels != in_channels_) {
    throw std::invalid_argument(weight_.name + ": expected " + std::to_string(in_channels_) +
                                " input channels, got " + x.ShapeString());
  }
  if (pad_mode_ == PadMode::kReflect && (padding_ >= x.height || padding_ >= x.width)) {
    throw std::invalid_argument(weight_.name + ": reflect padding exceeds input size");
  }
  const int out_h = ConvOutputSize(x.height, kernel_, stride_, padding_);
  const int out_w = ConvOutputSize(x.width, kernel_, stride_, padding_);
  if (out_h <= 0 || out_w <= 0) {
    throw std::invalid_argument(weight_.name + ": input " + x.ShapeString() + " too small");
  }
  const Geometry g{in_channels_, x.height, x.width, kernel_, stride_, padding_, out_h, out_w,
                   pad_mode_};
  const int k = in_channels_ * kernel_ * kernel_;
  const int n = out_h * out_w;
  cols.resize(static_cast<std::size_t>(k) * n);
  Im2Col(x.data.data(), g, cols.data());

  Tensor<T> y(out_channels_, out_h, out_w);
  MapRM<T> out(y.data.data(), out_channels_, n);
  out.noalias() = ConstMapRM<T>(weight_.value.data(), out_channels_, k) *
                  ConstMapRM<T>(cols.data(), k, n);
  if (has_bias_) {
    for (int c = 0; c < out_channels_; ++c) out.row(c).array() += bias_.value[c];
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::Infer(const Tensor<T>& x) const {
  std::vector<T> cols;
  return Compute(x, cols);
}

template <typename T>
Tensor<T> Conv2d<T>::Forward(const Tensor<T>& x) {
  in_h_ = x.height;
  in_w_ = x.width;
  return Compute(x, cols_);
}

template <typename T>
Tensor<T> Conv2d<T>::Backward(const Tensor<T>& grad_out) {
  const int k = in_channels_ * kernel_ * kernel_;
  const int n = grad_out.height * grad_out.width;
  ConstMapRM<T> dy(grad_out.data.data(), out_channels_, n);
  ConstMapRM<T> cols(cols_.data(), k, n);
  if (this->param_grad_enabled_) {
    MapRM<T>(weight_.grad.data(), out_channels_, k).noalias() += dy * cols.transpose();
    if (has_bias_) {
      for (int c = 0; c < out_channels_; ++c) {
        const T* row = grad_out.channel(c);
        T sum = T(0);
        for (int i = 0; i < n; ++i) sum += row[i];
        bias_.grad[c] += sum;
      }
    }
  }
  std::vector<T> dcols(static_cast<std::size_t>(k) * n);
  MapRM<T>(dcols.data(), k, n).noalias() =
      ConstMapRM<T>(weight_.value.data(), out_channels_, k).transpose() * dy;
  const Geometry g{in_channels_, in_h_, in_w_, kernel_, stride_, padding_, grad_out.height,
                   grad_out.width, pad_mode_};
  Tensor<T> dx(in_channels_, in_h_, in_w_);
  Col2Im(dcols.data(), g, dx.data.data());
  return dx;
}

template <typename T>
void Conv2d<T>::CollectParameters(ParameterList<T>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                                    int padding, int output_padding, bool bias, std::string name)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      output_padding_(output_padding),
      has_bias_(bias),
      weight_(name + ".weight", {in_channels, out_channels, kernel, kernel}),
      bias_(name + ".bias", {bias ? out_channels : 0}) {
  if (output_padding < 0 || output_padding >= stride) {
    throw std::invalid_argument("output_padding must be in [0, stride)");
  }
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::Infer(const Tensor<T>& x) const {
  if (x.channels != in_channels_) {
    throw std::invalid_argument(weight_.name + ": expected " + std::to_string(in_channels_) +
                                " input channels, got " + x.ShapeString());
  }
  const int out_h = (x.height - 1) * stride_ - 2 * padding_ + kernel_ + output_padding_;
  const int out_w = (x.width - 1) * stride_ - 2 * padding_ + kernel_ + output_padding_;
  const int k = out_channels_ * kernel_ * kernel_;
  const int n = x.height * x.width;
  std::vector<T> cols(static_cast<std::size_t>(k) * n);
  MapRM<T>(cols.data(), k, n).noalias() =
      ConstMapRM<T>(weight_.value.data(), in_channels_, k).transpose() *
      ConstMapRM<T>(x.data.data(), in_channels_, n);
  const Geometry g{out_channels_, out_h, out_w, kernel_, stride_, padding_, x.height, x.width,
                   PadMode::kZero};
  Tensor<T> y(out_channels_, out_h, out_w);
  Col2Im(cols.data(), g, y.data.data());
  if (has_bias_) {
    for (int c = 0; c < out_channels_; ++c) {
      T* p = y.channel(c);
      for (std::size_t i = 0; i < y.plane(); ++i) p[i] += bias_.value[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::Forward(const Tensor<T>& x) {
  input_ = x;
  return Infer(x);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::Backward(const Tensor<T>& grad_out) {
  const int k = out_channels_ * kernel_ * kernel_;
  const int n = input_.height * input_.width;
  const Geometry g{out_channels_, grad_out.height, grad_out.width, kernel_, stride_, padding_,
                   input_.height, input_.width, PadMode::kZero};
  std::vector<T> dcols(static_cast<std::size_t>(k) * n);
  Im2Col(grad_out.data.data(), g, dcols.data());
  ConstMapRM<T> dc(dcols.data(), k, n);
  if (this->param_grad_enabled_) {
    MapRM<T>(weight_.grad.data(), in_channels_, k).noalias() +=
        ConstMapRM<T>(input_.data.data(), in_channels_, n) * dc.transpose();
    if (has_bias_) {
      for (int c = 0; c < out_channels_; ++c) {
        const T* p = grad_out.channel(c);
        T s = 0;
        for (std::size_t i = 0; i < grad_out.plane(); ++i) s += p[i];
        bias_.grad[c] += s;
      }
    }
  }
  Tensor<T> dx(in_channels_, input_.height, input_.width);
  MapRM<T>(dx.data.data(), in_channels_, n).noalias() =
      ConstMapRM<T>(weight_.value.data(), in_channels_, k) * dc;
  return dx;
}

template <typename T>
void ConvTranspose2d<T>::CollectParameters(ParameterList<T>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------- InstanceNorm

template <typename T>
Tensor<T> InstanceNorm<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(x.channels, x.height, x.width);
  const std::size_t n = x.plane();
  for (int c = 0; c < x.channels; ++c) {
    const T* p = x.channel(c);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(n);
    const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps_)));
    T* q = y.channel(c);
    const T m = static_cast<T>(mean);
    for (std::size_t i = 0; i < n; ++i) q[i] = (p[i] - m) * inv;
  }
  return y;
}

template <typename T>
Tensor<T> InstanceNorm<T>::Forward(const Tensor<T>& x) {
  normalized_ = Infer(x);
  inv_std_.assign(static_cast<std::size_t>(x.channels), T(0));
  const std::size_t n = x.plane();
  for (int c = 0; c < x.channels; ++c) {
    const T* p = x.channel(c);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(n);
    inv_std_[static_cast<std::size_t>(c)] =
        static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps_)));
  }
  return normalized_;
}

template <typename T>
Tensor<T> InstanceNorm<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(grad_out.channels, grad_out.height, grad_out.width);
  const std::size_t n = grad_out.plane();
  const T inv_n = T(1) / static_cast<T>(n);
  for (int c = 0; c < grad_out.channels; ++c) {
    const T* dy = grad_out.channel(c);
    const T* xh = normalized_.channel(c);
    T sum_dy = 0;
    T sum_dy_xh = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_dy += dy[i];
      sum_dy_xh += dy[i] * xh[i];
    }
    const T inv = inv_std_[static_cast<std::size_t>(c)];
    T* d = dx.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = inv * (dy[i] - inv_n * sum_dy - xh[i] * inv_n * sum_dy_xh);
    }
  }
  return dx;
}

// -------------------------------------------------------------- Activate

template <typename T>
Tensor<T> Activate<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y = x;
  switch (kind_) {
    case Activation::kRelu:
      for (T& v : y.data) v = v > T(0) ? v : T(0);
      break;
    case Activation::kLeakyRelu:
      for (T& v : y.data) v = v > T(0) ? v : slope_ * v;
      break;
    case Activation::kTanh:
      for (T& v : y.data) v = std::tanh(v);
      break;
    case Activation::kSigmoid:
      for (T& v : y.data) v = T(1) / (T(1) + std::exp(-v));
      break;
  }
  return y;
}

template <typename T>
Tensor<T> Activate<T>::Forward(const Tensor<T>& x) {
  output_ = Infer(x);
  if (kind_ == Activation::kRelu || kind_ == Activation::kLeakyRelu) input_ = x;
  return output_;
}

template <typename T>
Tensor<T> Activate<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx = grad_out;
  switch (kind_) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(input_.data[i] > T(0))) dx.data[i] = T(0);
      }
      break;
    case Activation::kLeakyRelu:
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(input_.data[i] > T(0))) dx.data[i] *= slope_;
      }
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < dx.size(); ++i) {
        dx.data[i] *= T(1) - output_.data[i] * output_.data[i];
      }
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < dx.size(); ++i) {
        dx.data[i] *= output_.data[i] * (T(1) - output_.data[i]);
      }
      break;
  }
  return dx;
}

// --------------------------------------------------------------- Pooling

template <typename T>
Tensor<T> AvgPool2<T>::Infer(const Tensor<T>& x) const {
  const int h = x.height / 2;
  const int w = x.width / 2;
  if (h == 0 || w == 0) throw std::invalid_argument("AvgPool2: input " + x.ShapeString() + " too small");
  Tensor<T> y(x.channels, h, w);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        y.at(c, i, j) = T(0.25) * (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i, 2 * j + 1) +
                                   x.at(c, 2 * i + 1, 2 * j) + x.at(c, 2 * i + 1, 2 * j + 1));
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> AvgPool2<T>::Forward(const Tensor<T>& x) {
  in_h_ = x.height;
  in_w_ = x.width;
  return Infer(x);
}

template <typename T>
Tensor<T> AvgPool2<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(grad_out.channels, in_h_, in_w_);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int i = 0; i < grad_out.height; ++i) {
      for (int j = 0; j < grad_out.width; ++j) {
        const T g = T(0.25) * grad_out.at(c, i, j);
        dx.at(c, 2 * i, 2 * j) = g;
        dx.at(c, 2 * i, 2 * j + 1) = g;
        dx.at(c, 2 * i + 1, 2 * j) = g;
        dx.at(c, 2 * i + 1, 2 * j + 1) = g;
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> MaxPool2<T>::Infer(const Tensor<T>& x) const {
  const int h = x.height / 2;
  const int w = x.width / 2;
  if (h == 0 || w == 0) throw std::invalid_argument("MaxPool2: input " + x.ShapeString() + " too small");
  Tensor<T> y(x.channels, h, w);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        y.at(c, i, j) = std::max(std::max(x.at(c, 2 * i, 2 * j), x.at(c, 2 * i, 2 * j + 1)),
                                 std::max(x.at(c, 2 * i + 1, 2 * j), x.at(c, 2 * i + 1, 2 * j + 1)));
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::Forward(const Tensor<T>& x) {
  in_c_ = x.channels;
  in_h_ = x.height;
  in_w_ = x.width;
  const int h = x.height / 2;
  const int w = x.width / 2;
  if (h == 0 || w == 0) throw std::invalid_argument("MaxPool2: input " + x.ShapeString() + " too small");
  Tensor<T> y(x.channels, h, w);
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j, ++o) {
        std::size_t best = static_cast<std::size_t>(c) * x.plane() +
                           static_cast<std::size_t>(2 * i) * x.width + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t idx = static_cast<std::size_t>(c) * x.plane() +
                                    static_cast<std::size_t>(2 * i + di) * x.width + 2 * j + dj;
            if (x.data[idx] > x.data[best]) best = idx;
          }
        }
        argmax_[o] = best;
        y.data[o] = x.data[best];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(in_c_, in_h_, in_w_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) dx.data[argmax_[o]] += grad_out.data[o];
  return dx;
}

template <typename T>
Tensor<T> Upsample2<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y(x.channels, x.height * 2, x.width * 2);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < y.height; ++i) {
      for (int j = 0; j < y.width; ++j) y.at(c, i, j) = x.at(c, i / 2, j / 2);
    }
  }
  return y;
}

template <typename T>
Tensor<T> Upsample2<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
  for (int c = 0; c < grad_out.channels; ++c) {
    for (int i = 0; i < grad_out.height; ++i) {
      for (int j = 0; j < grad_out.width; ++j) dx.at(c, i / 2, j / 2) += grad_out.at(c, i, j);
    }
  }
  return dx;
}

// ----------------------------------------------------------- Containers

template <typename T>
Tensor<T> Sequential<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> h = x;
  for (const auto& layer : layers_) h = layer->Infer(h);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::Forward(const Tensor<T>& x) {
  Tensor<T> h = x;
  for (auto& layer : layers_) h = layer->Forward(h);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->Backward(g);
  return g;
}

template <typename T>
void Sequential<T>::CollectParameters(ParameterList<T>& out) {
  for (auto& layer : layers_) layer->CollectParameters(out);
}

template <typename T>
void Sequential<T>::SetParamGradEnabled(bool enabled) {
  this->param_grad_enabled_ = enabled;
  for (auto& layer : layers_) layer->SetParamGradEnabled(enabled);
}

template <typename T>
Tensor<T> Residual<T>::Infer(const Tensor<T>& x) const {
  Tensor<T> y = body_->Infer(x);
  AddInPlace(y, x);
  return y;
}

template <typename T>
Tensor<T> Residual<T>::Forward(const Tensor<T>& x) {
  Tensor<T> y = body_->Forward(x);
  AddInPlace(y, x);
  return y;
}

template <typename T>
Tensor<T> Residual<T>::Backward(const Tensor<T>& grad_out) {
  Tensor<T> dx = body_->Backward(grad_out);
  AddInPlace(dx, grad_out);
  return dx;
}

template <typename T>
void InitNormal(const ParameterList<T>& params, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std);
  for (Parameter<T>* p : params) {
    const bool is_bias = p->name.size() >= 5 && p->name.compare(p->name.size() - 5, 5, ".bias") == 0;
    for (T& v : p->value) v = is_bias ? T(0) : static_cast<T>(normal(rng));
  }
}

template class Conv2d<float>;
template class Conv2d<double>;
template class ConvTranspose2d<float>;
template class ConvTranspose2d<double>;
template class InstanceNorm<float>;
template class InstanceNorm<double>;
template class Activate<float>;
template class Activate<double>;
template class AvgPool2<float>;
template class AvgPool2<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Upsample2<float>;
template class Upsample2<double>;
template class Sequential<float>;
template class Sequential<double>;
template class Residual<float>;
template class Residual<double>;
template void InitNormal<float>(const ParameterList<float>&, double, std::mt19937_64&);
template void InitNormal<double>(const ParameterList<double>&, double, std::mt19937_64&);

}  // namespace histosynth::nn
