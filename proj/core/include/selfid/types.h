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

#ifndef SELFID_TYPES_H_
#define SELFID_TYPES_H_

#include <cstdint>

#include <Eigen/Core>

namespace selfid {

// Position or displacement of the point of manipulation, millimeters.
using Vec3 = Eigen::Vector3d;

// Actuation input, one component per actuator.
using Control = Eigen::VectorXd;

// Pair of local manipulation models.
//   Forward: control -> object motion.
//   Inverse: desired object motion -> control.
// The two maps are fitted independently; Inverse(Forward(u)) need not be u.
class MotionModel {
 public:
  virtual ~MotionModel() = default;

  virtual int control_dim() const = 0;
  virtual Vec3 Forward(const Control& control) const = 0;
  virtual Control Inverse(const Vec3& motion) const = 0;
};

// Hand-object system as seen by the controller: execute a control, observe
// the point of manipulation. Hidden state is never exposed here.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual int control_dim() const = 0;

  // current observed position
  virtual Vec3 Observe() const = 0;

  // apply control, return the newly observed position
  virtual Vec3 Execute(const Control& control) = 0;

  // number of Execute calls since the last reset
  virtual int64_t executions() const = 0;
};

// splitmix64 finalizer, used to derive independent random substreams
inline uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace selfid

#endif  // SELFID_TYPES_H_
