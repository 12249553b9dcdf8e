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
#include "histosynth/similarity/frechet.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace histosynth::similarity {
namespace {

void CheckStats(const GaussianStats& s, const char* which) {
  if (s.mean.size() == 0 || s.covariance.rows() != s.mean.size() || s.covariance.cols() != s.mean.size()) {
    throw std::invalid_argument(std::string("malformed gaussian stats (") + which + ")");
  }
  if (!s.mean.allFinite() || !s.covariance.allFinite()) {
    throw std::invalid_argument(std::string("non-finite gaussian stats (") + which + ")");
  }
}

void CheckPair(const GaussianStats& a, const GaussianStats& b) {
  CheckStats(a, "a");
  CheckStats(b, "b");
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("gaussian stats dims differ: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  }
}

}  // namespace

GaussianStats fit_gaussian_stats(const Eigen::MatrixXd& features) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw std::invalid_argument("need at least two feature vectors, got " + std::to_string(n));
  if (features.cols() == 0) throw std::invalid_argument("feature vectors are empty");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

GaussianStats fit_gaussian_stats(const std::vector<std::vector<double>>& features) {
  if (features.size() < 2) {
    throw std::invalid_argument("need at least two feature vectors, got " + std::to_string(features.size()));
  }
  const std::size_t dim = features.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) throw std::invalid_argument("feature vectors have differing lengths");
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
  }
  return fit_gaussian_stats(m);
}

Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -kPsdTolerance * scale) {
      throw std::invalid_argument("matrix is not positive semidefinite (eigenvalue " + std::to_string(values(i)) + ")");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  CheckPair(a, b);
  const Eigen::MatrixXd root_a = PsdSqrt(a.covariance);
  const Eigen::MatrixXd inner = root_a * b.covariance * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  double trace_root = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -kPsdTolerance * scale) {
      throw std::invalid_argument("covariance product is not positive semidefinite");
    }
    trace_root += std::sqrt(std::max(values(i), 0.0));
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double d2 = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_root;
  return std::max(d2, 0.0);
}

double frechet_distance_equal_covariance(const GaussianStats& a, const GaussianStats& b) {
  CheckPair(a, b);
  const double scale = std::max(1.0, a.covariance.cwiseAbs().maxCoeff());
  if ((a.covariance - b.covariance).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("covariances differ");
  }
  return (a.mean - b.mean).squaredNorm();
}

double evaluate_set_similarity(std::span<const core::RgbImage> real, std::span<const core::RgbImage> synth,
                               const FeatureEmbedder& embedder, int threads) {
  if (real.size() < 2 || synth.size() < 2) {
    throw std::invalid_argument("each image set needs at least two images (real " + std::to_string(real.size()) +
                                ", synthetic " + std::to_string(synth.size()) + ")");
  }
  const GaussianStats a = fit_gaussian_stats(EmbedAll(real, embedder, threads));
  const GaussianStats b = fit_gaussian_stats(EmbedAll(synth, embedder, threads));
  return frechet_distance(a, b);
}

}  // namespace histosynth::similarity
