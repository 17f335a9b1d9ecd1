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

// Synthetic hand-object system. The controller only ever sees the observed
// point of manipulation; the hidden state is reachable through
// SyntheticPlant::DebugState for tests.
//
// Transition for a control u with hidden state h:
//   J(h)_rc = B_rc * (1 + modulation * tanh(a_rc . h))
//   dz      = J(h) u + nonlinearity_gain * q(u) + process noise
//   h      <- h + drift_rate * (sqrt(|u|^2 + eps^2) - eps) * v
//   q(u)    = (sum_c u_c^2, sum_c u_c u_{(c+1) mod C}, 0)
// a_rc and v are fixed unit vectors (see ProjectionVector/DriftDirection).
// The observation adds independent Gaussian noise to the position. Planar
// presets zero the third motion component and its noise.

#ifndef SELFID_PLANT_SIM_H_
#define SELFID_PLANT_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "selfid/types.h"

namespace selfid {

struct PlantPreset {
  std::string name;
  Eigen::MatrixXd base_jacobian;  // 3 x C, mm per control unit
  double nonlinearity_gain = 0.0;
  double drift_rate = 0.0;
  double noise_std = 0.0;  // mm
  double modulation = 0.5;
  bool planar = true;
  int hidden_dim = 4;
  Vec3 origin = Vec3::Zero();

  int control_dim() const { return static_cast<int>(base_jacobian.cols()); }
  // throws std::invalid_argument
  void Validate() const;
};

// preset-1 .. preset-5; preset-4 is the near-linear default
std::vector<std::string> BuiltinPresetNames();
// throws std::invalid_argument for an unknown name
PlantPreset BuiltinPreset(std::string_view name);

// INI-style preset file, one section per preset:
//   [my-object]
//   jacobian = 1.6 0.4 ; -0.3 1.5 ; 0 0
//   nonlinearity_gain = 0.2
//   drift_rate = 0.01
//   noise_std = 0.05
//   modulation = 0.5
//   planar = true
//   hidden_dim = 4
//   origin = 0 0 0
// Omitted keys keep the values of preset-4; `base = preset-2` starts from
// another builtin preset instead (put it first in the section). Throws
// ParseError with the line number.
std::vector<PlantPreset> ReadPresets(std::istream& in);
std::vector<PlantPreset> LoadPresets(const std::string& path);

struct PlantState {
  Eigen::VectorXd hidden;
  Vec3 pom = Vec3::Zero();
  int64_t step_count = 0;
};

class SyntheticPlant : public Plant {
 public:
  SyntheticPlant(PlantPreset preset, uint64_t seed);

  // hidden ~ 0.1 N(0, I), pom at the preset origin
  void Reset(uint64_t seed);

  int control_dim() const override { return preset_.control_dim(); }
  Vec3 Observe() const override { return observed_; }
  Vec3 Execute(const Control& control) override;
  int64_t executions() const override { return state_.step_count; }

  const PlantPreset& preset() const { return preset_; }

  // test-only accessors for the hidden state
  const PlantState& DebugState() const { return state_; }
  Eigen::MatrixXd DebugJacobian() const;

 private:
  Vec3 NoiseSample(double stddev);

  PlantPreset preset_;
  std::vector<Eigen::VectorXd> projections_;  // a_rc, row-major
  Eigen::VectorXd drift_direction_;
  PlantState state_;
  Vec3 observed_ = Vec3::Zero();
  std::mt19937_64 rng_;
};

// deterministic unit vectors used by the transition
Eigen::VectorXd ProjectionVector(int row, int col, int control_dim,
                                 int hidden_dim);
Eigen::VectorXd DriftDirection(int hidden_dim);

// q(u) from the transition above
Vec3 QuadraticResponse(const Control& u);

}  // namespace selfid

#endif  // SELFID_PLANT_SIM_H_
