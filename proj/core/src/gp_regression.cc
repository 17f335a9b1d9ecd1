// Copyright 2026 The selfid Authors
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

#include "selfid/gp_regression.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <fmt/format.h>

namespace selfid {
namespace {

// Relative pivot floor for the Cholesky factor. Eigen only rejects
// non-positive pivots; rounding can leave a tiny positive one for an exactly
// singular Gram matrix.
constexpr double kPivotFloor = 1e-13;

bool Factorize(const Eigen::MatrixXd& gram, Eigen::LLT<Eigen::MatrixXd>* llt) {
  llt->compute(gram);
  if (llt->info() != Eigen::Success) return false;
  const Eigen::MatrixXd& l = llt->matrixLLT();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    double pivot = l(i, i) * l(i, i);
    if (!std::isfinite(pivot) || pivot <= kPivotFloor * gram(i, i)) {
      return false;
    }
  }
  return true;
}

}  // namespace

void KernelParams::Validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw std::invalid_argument(
        fmt::format("length_scale must be positive, got {}", length_scale));
  }
  if (!(noise_jitter >= 0.0) || !std::isfinite(noise_jitter)) {
    throw std::invalid_argument(
        fmt::format("noise_jitter must be non-negative, got {}", noise_jitter));
  }
}

double RbfKernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b,
                 const KernelParams& params) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(fmt::format(
        "rbf kernel: dimension mismatch ({} vs {})", a.size(), b.size()));
  }
  double sq = (a - b).squaredNorm();
  return std::exp(-sq / (2.0 * params.length_scale * params.length_scale));
}

GpModel GpModel::Fit(const Eigen::MatrixXd& inputs,
                     const Eigen::MatrixXd& targets, const KernelParams& params,
                     int max_retries) {
  params.Validate();
  if (inputs.rows() == 0) {
    throw std::invalid_argument("gp fit: empty training set");
  }
  if (inputs.rows() != targets.rows()) {
    throw std::invalid_argument(
        fmt::format("gp fit: {} inputs but {} targets", inputs.rows(),
                    targets.rows()));
  }
  if (inputs.cols() == 0 || targets.cols() == 0) {
    throw std::invalid_argument("gp fit: zero-dimensional inputs or targets");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("gp fit: non-finite training data");
  }

  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double k = RbfKernel(inputs.row(i).transpose(), inputs.row(j).transpose(),
                           params);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }

  double jitter = params.noise_jitter;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd regularized = gram;
    regularized.diagonal().array() += jitter;
    if (Factorize(regularized, &llt)) break;
    if (attempt >= max_retries) {
      throw IllConditionedError(fmt::format(
          "gp fit: Gram matrix of {} points not positive definite with "
          "jitter {}",
          n, jitter));
    }
    jitter *= kJitterGrowth;
  }

  GpModel model;
  model.inputs_ = inputs;
  model.targets_ = targets;
  model.params_ = params;
  model.jitter_used_ = jitter;
  model.dual_weights_ = llt.solve(targets);
  return model;
}

Eigen::VectorXd GpModel::PredictMean(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != inputs_.cols()) {
    throw std::invalid_argument(fmt::format(
        "gp predict: expected input of dimension {}, got {}", inputs_.cols(),
        x.size()));
  }
  const double inv_two_l2 =
      1.0 / (2.0 * params_.length_scale * params_.length_scale);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dual_weights_.cols());
  for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
    double sq = (inputs_.row(i).transpose() - x).squaredNorm();
    mean += std::exp(-sq * inv_two_l2) * dual_weights_.row(i).transpose();
  }
  return mean;
}

}  // namespace selfid
