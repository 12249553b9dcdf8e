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
#include "histosynth/similarity/embedder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace histosynth::similarity {
namespace {

void CheckInput(const FeatureEmbedder& e, const core::RgbImage& image) {
  if (image.width() != e.input_width() || image.height() != e.input_height()) {
    throw std::invalid_argument(e.name() + " embedder expects " + std::to_string(e.input_width()) + "x" +
                                std::to_string(e.input_height()) + " input, got " +
                                std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
}

// Planar [c][y][x] copy scaled to [-1, 1].
std::vector<double> ToPlanar(const core::RgbImage& image) {
  const int w = image.width();
  const int h = image.height();
  std::vector<double> out(static_cast<std::size_t>(3) * w * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        out[(static_cast<std::size_t>(c) * h + y) * w + x] = image.at(x, y, c) / 127.5 - 1.0;
      }
    }
  }
  return out;
}

std::vector<double> Pool2(const std::vector<double>& planes, int w, int h) {
  const int ow = w / 2;
  const int oh = h / 2;
  std::vector<double> out(static_cast<std::size_t>(3) * ow * oh);
  for (int c = 0; c < 3; ++c) {
    const double* in = planes.data() + static_cast<std::size_t>(c) * w * h;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const double s = in[(2 * y) * w + 2 * x] + in[(2 * y) * w + 2 * x + 1] +
                         in[(2 * y + 1) * w + 2 * x] + in[(2 * y + 1) * w + 2 * x + 1];
        out[(static_cast<std::size_t>(c) * oh + y) * ow + x] = 0.25 * s;
      }
    }
  }
  return out;
}

// Area average onto a gw x gh grid, values in [0, 1], ordered (y, x, channel).
std::vector<double> GridPool(const core::RgbImage& image, int gw, int gh) {
  std::vector<double> out(static_cast<std::size_t>(gw) * gh * 3, 0.0);
  std::vector<double> count(static_cast<std::size_t>(gw) * gh, 0.0);
  for (int y = 0; y < image.height(); ++y) {
    const int gy = y * gh / image.height();
    for (int x = 0; x < image.width(); ++x) {
      const int gx = x * gw / image.width();
      const std::size_t cell = static_cast<std::size_t>(gy) * gw + gx;
      for (int c = 0; c < 3; ++c) out[cell * 3 + c] += image.at(x, y, c) / 255.0;
      count[cell] += 1.0;
    }
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    for (int c = 0; c < 3; ++c) out[i * 3 + c] /= std::max(count[i], 1.0);
  }
  return out;
}

}  // namespace

core::RgbImage ResizeBilinear(const core::RgbImage& image, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize target must be positive");
  if (image.width() == width && image.height() == height) return image;
  core::RgbImage out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = fx - x0;
      std::array<std::uint8_t, 3> px{};
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - ty) * ((1 - tx) * image.at(x0, y0, c) + tx * image.at(x1, y0, c)) +
                         ty * ((1 - tx) * image.at(x0, y1, c) + tx * image.at(x1, y1, c));
        px[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
      out.set(x, y, px);
    }
  }
  return out;
}

core::RgbImage PrepareForEmbedder(const core::RgbImage& image, const FeatureEmbedder& embedder) {
  if (image.empty()) throw std::invalid_argument("cannot embed an empty image");
  if (image.width() < kMinEmbedSide || image.height() < kMinEmbedSide) {
    throw std::invalid_argument("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                " is below the minimum embeddable size");
  }
  return ResizeBilinear(image, embedder.input_width(), embedder.input_height());
}

std::vector<std::vector<double>> EmbedAll(std::span<const core::RgbImage> images,
                                          const FeatureEmbedder& embedder, int threads) {
  std::vector<std::vector<double>> rows(images.size());
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(std::max<std::size_t>(images.size(), 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < images.size(); ++i) rows[i] = embedder.Embed(PrepareForEmbedder(images[i], embedder));
    return rows;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < images.size(); i += static_cast<std::size_t>(threads)) {
          rows[i] = embedder.Embed(PrepareForEmbedder(images[i], embedder));
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

ToyEmbedder::ToyEmbedder(std::uint64_t seed, int n_filters, int width, int height)
    : n_filters_(n_filters), width_(width), height_(height) {
  if (n_filters <= 0 || width < 16 || height < 16) throw std::invalid_argument("bad toy embedder geometry");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(75.0));
  filters_.resize(static_cast<std::size_t>(n_filters) * 75);
  for (int f = 0; f < n_filters; ++f) {
    double* w = filters_.data() + static_cast<std::size_t>(f) * 75;
    double mean = 0.0;
    for (int i = 0; i < 75; ++i) mean += (w[i] = normal(rng));
    mean /= 75.0;
    for (int i = 0; i < 75; ++i) w[i] -= mean;
  }
  bias_.assign(static_cast<std::size_t>(n_filters), 0.0);
}

std::vector<double> ToyEmbedder::Embed(const core::RgbImage& image) const {
  CheckInput(*this, image);
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(dim()));

  std::vector<double> planes = ToPlanar(image);
  int w = width_;
  int h = height_;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = planes[c * plane + i];
      s += v;
      s2 += v * v;
    }
    const double mean = s / plane;
    features.push_back(mean);
    features.push_back(std::sqrt(std::max(0.0, s2 / plane - mean * mean)));
  }

  for (int scale = 0; scale < 2; ++scale) {
    if (scale == 1) {
      planes = Pool2(planes, w, h);
      w /= 2;
      h /= 2;
    }
    const int ow = w - 4;
    const int oh = h - 4;
    const double n = static_cast<double>(ow) * oh;
    for (int f = 0; f < n_filters_; ++f) {
      const double* k = filters_.data() + static_cast<std::size_t>(f) * 75;
      double relu_sum = 0.0;
      double sq_sum = 0.0;
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          double r = bias_[static_cast<std::size_t>(f)];
          for (int c = 0; c < 3; ++c) {
            const double* in = planes.data() + static_cast<std::size_t>(c) * w * h;
            const double* kc = k + c * 25;
            for (int dy = 0; dy < 5; ++dy) {
              const double* row = in + static_cast<std::size_t>(y + dy) * w + x;
              for (int dx = 0; dx < 5; ++dx) r += kc[dy * 5 + dx] * row[dx];
            }
          }
          relu_sum += std::max(r, 0.0);
          sq_sum += r * r;
        }
      }
      features.push_back(relu_sum / n);
      features.push_back(sq_sum / n);
    }
  }
  return features;
}

ProjectionEmbedder::ProjectionEmbedder(std::uint64_t seed, int dim, int width, int height, int grid)
    : dim_(dim), width_(width), height_(height), grid_(grid) {
  if (dim <= 0 || grid <= 0 || width < grid || height < grid) {
    throw std::invalid_argument("bad projection embedder geometry");
  }
  const int in = 3 * grid * grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  weights_.resize(static_cast<std::size_t>(dim) * in);
  for (double& v : weights_) v = normal(rng);
}

std::vector<double> ProjectionEmbedder::Embed(const core::RgbImage& image) const {
  CheckInput(*this, image);
  std::vector<double> pooled = GridPool(image, grid_, grid_);
  for (double& v : pooled) v = 2.0 * v - 1.0;
  std::vector<double> out(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d) {
    double s = 0.0;
    const double* w = weights_.data() + static_cast<std::size_t>(d) * pooled.size();
    for (std::size_t i = 0; i < pooled.size(); ++i) s += w[i] * pooled[i];
    out[static_cast<std::size_t>(d)] = std::tanh(s);
  }
  return out;
}

std::unique_ptr<LinearWeightsEmbedder> LinearWeightsEmbedder::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedder weights " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed embedder weights " + path.string() + ": " + e.what());
  }
  auto e = std::unique_ptr<LinearWeightsEmbedder>(new LinearWeightsEmbedder());
  try {
    e->name_ = j.value("name", path.stem().string());
    e->width_ = j.at("input_width").get<int>();
    e->height_ = j.at("input_height").get<int>();
    e->grid_w_ = j.at("grid_width").get<int>();
    e->grid_h_ = j.at("grid_height").get<int>();
    e->activation_ = j.value("activation", "identity");
    e->weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    e->bias_ = j.at("bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error("embedder weights " + path.string() + ": " + ex.what());
  }
  if (e->width_ <= 0 || e->height_ <= 0 || e->grid_w_ <= 0 || e->grid_h_ <= 0 || e->grid_w_ > e->width_ ||
      e->grid_h_ > e->height_) {
    throw std::runtime_error("embedder weights " + path.string() + ": bad geometry");
  }
  if (e->activation_ != "identity" && e->activation_ != "relu" && e->activation_ != "tanh") {
    throw std::runtime_error("embedder weights " + path.string() + ": unknown activation " + e->activation_);
  }
  const std::size_t in_dim = static_cast<std::size_t>(e->grid_w_) * e->grid_h_ * 3;
  if (e->bias_.empty() || e->weights_.size() != e->bias_.size()) {
    throw std::runtime_error("embedder weights " + path.string() + ": weights/bias row mismatch");
  }
  for (const auto& row : e->weights_) {
    if (row.size() != in_dim) throw std::runtime_error("embedder weights " + path.string() + ": row width mismatch");
  }
  return e;
}

std::vector<double> LinearWeightsEmbedder::Embed(const core::RgbImage& image) const {
  CheckInput(*this, image);
  const std::vector<double> pooled = GridPool(image, grid_w_, grid_h_);
  std::vector<double> out(bias_.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    double s = bias_[d];
    for (std::size_t i = 0; i < pooled.size(); ++i) s += weights_[d][i] * pooled[i];
    if (activation_ == "relu") s = std::max(s, 0.0);
    if (activation_ == "tanh") s = std::tanh(s);
    out[d] = s;
  }
  return out;
}

std::unique_ptr<FeatureEmbedder> MakeEmbedder(const std::string& spec, std::uint64_t seed) {
  if (spec == "toy") return std::make_unique<ToyEmbedder>(seed);
  if (spec == "projection") return std::make_unique<ProjectionEmbedder>(seed);
  if (spec.rfind("file:", 0) == 0) return LinearWeightsEmbedder::Load(spec.substr(5));
  throw std::invalid_argument("unknown embedder '" + spec + "'");
}

std::vector<std::string> BuiltinEmbedderNames() { return {"toy", "projection"}; }

}  // namespace histosynth::similarity
