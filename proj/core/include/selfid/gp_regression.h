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

#ifndef SELFID_GP_REGRESSION_H_
#define SELFID_GP_REGRESSION_H_

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace selfid {

// Raised when the Gram matrix cannot be factorized even after jitter
// escalation.
class IllConditionedError : public std::runtime_error {
 public:
  explicit IllConditionedError(const std::string& what)
      : std::runtime_error(what) {}
};

struct KernelParams {
  double length_scale = 1.0;
  // added to the Gram diagonal before factorization
  double noise_jitter = 1e-6;

  // throws std::invalid_argument
  void Validate() const;
};

// exp(-|a - b|^2 / (2 l^2)). Throws std::invalid_argument on a dimension
// mismatch.
double RbfKernel(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b,
                 const KernelParams& params);

// Zero-mean Gaussian process posterior mean with an isotropic RBF kernel.
// Every output dimension is regressed independently against one shared
// Cholesky factorization of (K + jitter I). Immutable after Fit, so a model
// can be read from several threads at once.
class GpModel {
 public:
  // Jitter is multiplied by kJitterGrowth after each failed factorization,
  // at most kMaxJitterRetries times.
  static constexpr int kMaxJitterRetries = 3;
  static constexpr double kJitterGrowth = 10.0;

  // Rows of `inputs` and `targets` are paired training points.
  static GpModel Fit(const Eigen::MatrixXd& inputs,
                     const Eigen::MatrixXd& targets, const KernelParams& params,
                     int max_retries = kMaxJitterRetries);

  Eigen::VectorXd PredictMean(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  int size() const { return static_cast<int>(inputs_.rows()); }
  int input_dim() const { return static_cast<int>(inputs_.cols()); }
  int output_dim() const { return static_cast<int>(targets_.cols()); }

  const KernelParams& params() const { return params_; }
  // jitter after escalation; equals params().noise_jitter when the first
  // factorization succeeded
  double jitter_used() const { return jitter_used_; }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }
  // (K + jitter I)^-1 Y, one column per output dimension
  const Eigen::MatrixXd& dual_weights() const { return dual_weights_; }

 private:
  GpModel() = default;

  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
  Eigen::MatrixXd dual_weights_;
  KernelParams params_;
  double jitter_used_ = 0.0;
};

}  // namespace selfid

#endif  // SELFID_GP_REGRESSION_H_
