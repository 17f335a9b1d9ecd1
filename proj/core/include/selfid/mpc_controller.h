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

#ifndef SELFID_MPC_CONTROLLER_H_
#define SELFID_MPC_CONTROLLER_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <vector>

#include "selfid/types.h"

namespace selfid {

// Random-shooting MPC settings.
struct MpcConfig {
  int horizon = 5;        // K, maximum prediction horizon
  int num_rollouts = 50;  // Q, simulated trajectories per step
  // variance of the Gaussian control perturbation (covariance sigma * I)
  double sigma = 0.1;
  double waypoint_spacing = 0.5;  // mm
  // componentwise bound on simulated controls, applied after the
  // perturbation; infinity leaves controls unbounded
  double control_limit = std::numeric_limits<double>::infinity();

  // throws std::invalid_argument
  void Validate() const;
};

// Waypoints linearly interpolated between two consecutive keypoints. The
// first waypoint is the previous keypoint, the last one the target.
struct IntermediateTrajectory {
  std::vector<Vec3> waypoints;

  std::size_t size() const { return waypoints.size(); }
  const Vec3& operator[](std::size_t j) const { return waypoints[j]; }
};

// M = max(2, ceil(|to - from| / spacing) + 1) equally spaced points.
IntermediateTrajectory Interpolate(const Vec3& from, const Vec3& to,
                                   double spacing);

// Index (0-based) of the waypoint closest to z; ties go to the larger index.
std::size_t NearestWaypoint(const IntermediateTrajectory& trajectory,
                            const Vec3& z);

// One simulated trajectory. states[0] is the start position; controls[k]
// moves states[k] to states[k + 1].
struct Rollout {
  std::vector<Control> controls;
  std::vector<Vec3> states;
  double cost = 0.0;
};

// Simulates `steps` model steps starting from waypoint `nearest`:
//   u_k     = clamp(Inverse(w[nearest + k + 1] - z_k) + xi),  xi ~ N(0, sigma I)
//   z_{k+1} = Forward(u_k) + z_k
// cost = sum_{k=0..steps} |z_k - w[nearest + k]|.
// Requires nearest + steps < trajectory.size().
Rollout SimulateRollout(const MotionModel& models,
                        const IntermediateTrajectory& trajectory,
                        std::size_t nearest, const Vec3& start, int steps,
                        double sigma, std::mt19937_64& rng,
                        double control_limit =
                            std::numeric_limits<double>::infinity());

struct MpcStepResult {
  Control control;
  std::size_t nearest = 0;  // 0-based
  int horizon = 0;          // L
  // the nearest waypoint is the segment end; `control` is zero
  bool at_final_waypoint = false;
  int best_rollout = 0;
  double best_cost = 0.0;
  // all Q rollouts, filled only when requested
  std::vector<Rollout> rollouts;
};

// One MPC step toward `to`. Rollout q draws its noise from a substream seeded
// by MixSeed(seed + q), so the result does not depend on evaluation order.
MpcStepResult MpcStep(const MotionModel& models, const Vec3& z,
                      const Vec3& from, const Vec3& to,
                      const MpcConfig& config, uint64_t seed,
                      bool keep_rollouts = false);

// Debug records for every rollout of one step:
//   step,q,cost,best,k,x,y,z        (one line per predicted state)
void WriteRolloutHeader(std::ostream& out);
void WriteRollouts(std::ostream& out, int step, const MpcStepResult& result);

}  // namespace selfid

#endif  // SELFID_MPC_CONTROLLER_H_
