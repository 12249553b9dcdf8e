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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace histosynth::nn {

/// Dense channel-major (C x H x W) activation for a single sample.
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
                 static_cast<std::size_t>(w),
             fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool empty() const { return data.empty(); }

  T& at(int c, int y, int x) {
    return data[static_cast<std::size_t>(c) * plane() +
                static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  T at(int c, int y, int x) const {
    return data[static_cast<std::size_t>(c) * plane() +
                static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  T* channel(int c) { return data.data() + static_cast<std::size_t>(c) * plane(); }
  const T* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * plane();
  }

  bool SameShape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  std::string ShapeString() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
  }

  template <typename U>
  Tensor<U> Cast() const {
    Tensor<U> out(channels, height, width);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

/// Channel-wise concatenation.
template <typename T>
Tensor<T> Concat(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("Concat: spatial shapes differ (" + a.ShapeString() + " vs " +
                                b.ShapeString() + ")");
  }
  Tensor<T> out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

/// Channels [begin, begin + count).
template <typename T>
Tensor<T> SliceChannels(const Tensor<T>& t, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > t.channels) {
    throw std::out_of_range("SliceChannels: range outside tensor");
  }
  Tensor<T> out(count, t.height, t.width);
  std::copy(t.channel(begin), t.channel(begin) + static_cast<std::ptrdiff_t>(out.size()),
            out.data.begin());
  return out;
}

}  // namespace histosynth::nn
