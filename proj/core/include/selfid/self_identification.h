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

#ifndef SELFID_SELF_IDENTIFICATION_H_
#define SELFID_SELF_IDENTIFICATION_H_

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "selfid/gp_regression.h"
#include "selfid/types.h"

namespace selfid {

// One executed control and the object motion observed after it.
struct Sample {
  Control control;
  Vec3 motion = Vec3::Zero();
};

// Training set of exploratory actions, in insertion order. With a capacity
// set, the oldest pair is evicted once the set is full.
class Dataset {
 public:
  explicit Dataset(int control_dim, std::optional<std::size_t> capacity = {});

  // throws std::invalid_argument on a control of the wrong dimension or
  // non-finite values
  void Add(const Control& control, const Vec3& motion);

  int control_dim() const { return control_dim_; }
  std::optional<std::size_t> capacity() const { return capacity_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  // one row per sample
  Eigen::MatrixXd Controls() const;
  Eigen::MatrixXd Motions() const;

  bool operator==(const Dataset& other) const;

 private:
  int control_dim_;
  std::optional<std::size_t> capacity_;
  std::deque<Sample> samples_;
};

// Line-oriented text format:
//   # schema=1 dataset
//   control_dim=<C>,count=<P>
//   u_1,...,u_C,dz_x,dz_y,dz_z        (P records)
// Values use the shortest round-trip decimal form, so a load reproduces the
// saved doubles bit for bit.
void WriteDataset(std::ostream& out, const Dataset& dataset);
// throws std::runtime_error naming the offending line
Dataset ReadDataset(std::istream& in);
void SaveDataset(const std::string& path, const Dataset& dataset);
Dataset LoadDataset(const std::string& path);

struct ExplorationConfig {
  int random_actions = 10;   // d
  int extra_actions = 10;    // a
  int adapting_actions = 3;  // b, per model update
  // controls are drawn from [-exploration_range, exploration_range]^C
  double exploration_range = 1.0;
  int control_dim = 2;
  // FIFO bound on the dataset size; nullopt keeps every sample
  std::optional<std::size_t> capacity = 100;

  // Zero selects the default: half the exploration range for the forward
  // model, half the largest observed motion norm for the inverse model.
  double forward_length_scale = 0.0;
  double inverse_length_scale = 0.0;
  // Gram diagonal term for both models; acts as a noise variance relative to
  // the unit kernel amplitude
  double noise_jitter = 1e-2;

  int initial_actions() const { return random_actions + extra_actions; }
  // throws std::invalid_argument
  void Validate() const;
};

// Fitted pair of local manipulation models, both regressed from one dataset
// with domain and codomain swapped.
class ManipulationModels : public MotionModel {
 public:
  // throws std::invalid_argument on an empty dataset, IllConditionedError
  // when a Gram matrix cannot be factorized
  static ManipulationModels Fit(const Dataset& dataset,
                                const ExplorationConfig& config);

  int control_dim() const override { return forward_.input_dim(); }
  Vec3 Forward(const Control& control) const override;
  Control Inverse(const Vec3& motion) const override;

  const GpModel& forward() const { return forward_; }
  const GpModel& inverse() const { return inverse_; }
  std::size_t source_dataset_size() const { return source_dataset_size_; }

 private:
  ManipulationModels(GpModel forward, GpModel inverse, std::size_t n)
      : forward_(std::move(forward)),
        inverse_(std::move(inverse)),
        source_dataset_size_(n) {}

  GpModel forward_;
  GpModel inverse_;
  std::size_t source_dataset_size_;
};

// Uniform in [-range, range] per component.
Control RandomControl(const ExplorationConfig& config, std::mt19937_64& rng);

// Reciprocal distance from motion i to its nearest other motion. Returns
// +infinity for an exactly duplicated motion. Throws std::invalid_argument
// when the dataset has fewer than two samples or i is out of range.
double LocalDensity(const Dataset& dataset, std::size_t i);

struct PairSelection {
  std::size_t lowest_density = 0;    // p
  std::size_t nearest_neighbor = 0;  // p'
  Control control;                   // (u_p + u_p') / 2
};

// Picks the sample with the lowest local density and its nearest neighbor in
// motion space. Exact duplicates are never chosen as p; ties go to the lowest
// index. Returns nullopt when every motion is duplicated. Throws
// std::invalid_argument for fewer than two samples.
std::optional<PairSelection> SelectPair(const Dataset& dataset);

// Midpoint control of SelectPair, or one uniform random control when every
// motion is duplicated.
Control SelectExploratoryControl(const Dataset& dataset,
                                 const ExplorationConfig& config,
                                 std::mt19937_64& rng);

enum class IdentifyMode {
  kInitial,  // d random + a density-guided actions
  kAdapt,    // b density-guided actions
};

struct ExploratoryAction {
  Control control;
  Vec3 motion = Vec3::Zero();
  Vec3 position_after = Vec3::Zero();
  bool random = false;
};

struct Identification {
  ManipulationModels models;
  std::vector<ExploratoryAction> actions;
};

// Executes exploratory actions on the plant, appending each observed
// (control, motion) pair to `dataset`, then refits both models. The density
// selection is recomputed after every insertion.
Identification SelfIdentify(Plant& plant, const ExplorationConfig& config,
                            Dataset& dataset, IdentifyMode mode,
                            std::mt19937_64& rng);

struct Transfer {
  ManipulationModels models;
  Dataset dataset;
};

// Initializes models from a dataset gathered on another setup. The dataset is
// used unchanged; no plant interaction happens here.
Transfer TransferModels(const Dataset& saved, const ExplorationConfig& config);

}  // namespace selfid

#endif  // SELFID_SELF_IDENTIFICATION_H_
