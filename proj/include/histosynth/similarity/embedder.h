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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "histosynth/core/label_grid.h"

namespace histosynth::similarity {

/// Maps an image of exactly input_width() x input_height() to a fixed-length
/// feature vector. Embed must be safe to call concurrently.
class FeatureEmbedder {
 public:
  virtual ~FeatureEmbedder() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual bool deterministic() const = 0;
  virtual int input_width() const = 0;
  virtual int input_height() const = 0;

  /// Throws std::invalid_argument on a size mismatch.
  virtual std::vector<double> Embed(const core::RgbImage& image) const = 0;
};

/// Smallest image side accepted for resizing onto an embedder input.
inline constexpr int kMinEmbedSide = 8;

/// Bilinear resize (pixel-centre aligned).
core::RgbImage ResizeBilinear(const core::RgbImage& image, int width, int height);

/// Resizes to the embedder input. Rejects empty images and images with a side
/// below kMinEmbedSide.
core::RgbImage PrepareForEmbedder(const core::RgbImage& image, const FeatureEmbedder& embedder);

/// Embeds every image (after PrepareForEmbedder) on up to `threads` workers;
/// 0 picks the hardware concurrency. Row i belongs to images[i].
std::vector<std::vector<double>> EmbedAll(std::span<const core::RgbImage> images,
                                          const FeatureEmbedder& embedder, int threads = 0);

/// Texture embedder: a fixed bank of seeded random 5x5 colour filters applied
/// at two scales, pooled to the mean of the rectified response and the mean
/// squared response, plus per-channel intensity mean and standard deviation.
class ToyEmbedder : public FeatureEmbedder {
 public:
  explicit ToyEmbedder(std::uint64_t seed = 0, int n_filters = 16, int width = 128, int height = 64);

  std::string name() const override { return "toy"; }
  int dim() const override { return n_filters_ * 4 + 6; }
  bool deterministic() const override { return true; }
  int input_width() const override { return width_; }
  int input_height() const override { return height_; }
  std::vector<double> Embed(const core::RgbImage& image) const override;

 private:
  int n_filters_;
  int width_;
  int height_;
  std::vector<double> filters_;  // [filter][channel][5][5]
  std::vector<double> bias_;
};

/// Downsamples to a small grid and applies a seeded Gaussian random projection
/// followed by tanh.
class ProjectionEmbedder : public FeatureEmbedder {
 public:
  explicit ProjectionEmbedder(std::uint64_t seed = 0, int dim = 32, int width = 128, int height = 64,
                              int grid = 8);

  std::string name() const override { return "projection"; }
  int dim() const override { return dim_; }
  bool deterministic() const override { return true; }
  int input_width() const override { return width_; }
  int input_height() const override { return height_; }
  std::vector<double> Embed(const core::RgbImage& image) const override;

 private:
  int dim_;
  int width_;
  int height_;
  int grid_;
  std::vector<double> weights_;  // [dim][3 * grid_h * grid_w]
};

/// Adapter for externally supplied weights. The JSON document holds
/// {"name", "input_width", "input_height", "grid_width", "grid_height",
///  "activation": "identity"|"relu"|"tanh", "weights": [[...]], "bias": [...]};
/// features are activation(W * pooled_pixels + b) where pooled_pixels is the
/// image area-averaged to the grid, scaled to [0, 1], ordered (y, x, channel).
class LinearWeightsEmbedder : public FeatureEmbedder {
 public:
  static std::unique_ptr<LinearWeightsEmbedder> Load(const std::filesystem::path& path);

  std::string name() const override { return name_; }
  int dim() const override { return static_cast<int>(bias_.size()); }
  bool deterministic() const override { return true; }
  int input_width() const override { return width_; }
  int input_height() const override { return height_; }
  std::vector<double> Embed(const core::RgbImage& image) const override;

 private:
  std::string name_;
  int width_ = 0;
  int height_ = 0;
  int grid_w_ = 0;
  int grid_h_ = 0;
  std::string activation_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
};

/// "toy", "projection" or "file:<path to weights json>".
std::unique_ptr<FeatureEmbedder> MakeEmbedder(const std::string& spec, std::uint64_t seed = 0);

std::vector<std::string> BuiltinEmbedderNames();

}  // namespace histosynth::similarity
