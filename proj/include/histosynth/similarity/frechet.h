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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "histosynth/core/label_grid.h"
#include "histosynth/similarity/embedder.h"

namespace histosynth::similarity {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Rows are samples. Sample mean and unbiased covariance, symmetrised.
/// Throws std::invalid_argument for fewer than two rows or ragged rows.
GaussianStats fit_gaussian_stats(const Eigen::MatrixXd& features);
GaussianStats fit_gaussian_stats(const std::vector<std::vector<double>>& features);

/// Eigenvalues above -kPsdTolerance * max(1, largest |eigenvalue|) are
/// clipped to zero before square roots; anything more negative is rejected.
inline constexpr double kPsdTolerance = 1e-6;

/// Squared Frechet distance between two Gaussians:
/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// The same quantity when both covariances are equal: |mu_a - mu_b|^2.
/// Requires equal covariances (within 1e-12 relative).
double frechet_distance_equal_covariance(const GaussianStats& a, const GaussianStats& b);

/// Symmetric PSD square root via eigendecomposition, with the clipping rule
/// above.
Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& m);

/// Embeds both sets, fits a Gaussian to each and returns the squared Frechet
/// distance. Each set needs at least two images.
double evaluate_set_similarity(std::span<const core::RgbImage> real, std::span<const core::RgbImage> synth,
                               const FeatureEmbedder& embedder, int threads = 0);

}  // namespace histosynth::similarity
