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

#include "selfid/mpc_controller.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "selfid/text_io.h"

namespace selfid {

void MpcConfig::Validate() const {
  if (horizon < 1) throw std::invalid_argument("mpc: horizon K must be >= 1");
  if (num_rollouts < 1) {
    throw std::invalid_argument("mpc: rollout count Q must be >= 1");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("mpc: sigma must be >= 0");
  }
  if (!(waypoint_spacing > 0.0) || !std::isfinite(waypoint_spacing)) {
    throw std::invalid_argument("mpc: waypoint spacing must be positive");
  }
  if (!(control_limit > 0.0)) {
    throw std::invalid_argument("mpc: control limit must be positive");
  }
}

IntermediateTrajectory Interpolate(const Vec3& from, const Vec3& to,
                                   double spacing) {
  if (!(spacing > 0.0)) {
    throw std::invalid_argument("interpolate: spacing must be positive");
  }
  double length = (to - from).norm();
  std::size_t m = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(length / spacing)) + 1);
  IntermediateTrajectory trajectory;
  trajectory.waypoints.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    double s = static_cast<double>(j) / static_cast<double>(m - 1);
    trajectory.waypoints.push_back(from + s * (to - from));
  }
  // exact endpoints regardless of rounding
  trajectory.waypoints.front() = from;
  trajectory.waypoints.back() = to;
  return trajectory;
}

std::size_t NearestWaypoint(const IntermediateTrajectory& trajectory,
                            const Vec3& z) {
  if (trajectory.waypoints.empty()) {
    throw std::invalid_argument("nearest waypoint: empty trajectory");
  }
  std::size_t best = 0;
  double best_d = (z - trajectory[0]).squaredNorm();
  for (std::size_t j = 1; j < trajectory.size(); ++j) {
    double d = (z - trajectory[j]).squaredNorm();
    if (d <= best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Rollout SimulateRollout(const MotionModel& models,
                        const IntermediateTrajectory& trajectory,
                        std::size_t nearest, const Vec3& start, int steps,
                        double sigma, std::mt19937_64& rng,
                        double control_limit) {
  if (steps < 0 || nearest + steps >= trajectory.size()) {
    throw std::invalid_argument(fmt::format(
        "rollout: horizon {} from waypoint {} exceeds {} waypoints", steps,
        nearest, trajectory.size()));
  }
  const double stddev = std::sqrt(sigma);
  std::normal_distribution<double> normal(0.0, 1.0);

  Rollout rollout;
  rollout.controls.reserve(steps);
  rollout.states.reserve(steps + 1);
  rollout.states.push_back(start);
  rollout.cost = (start - trajectory[nearest]).norm();

  Vec3 z = start;
  for (int k = 0; k < steps; ++k) {
    Control u = models.Inverse(trajectory[nearest + k + 1] - z);
    if (stddev > 0.0) {
      for (Eigen::Index c = 0; c < u.size(); ++c) u[c] += stddev * normal(rng);
    }
    if (std::isfinite(control_limit)) {
      u = u.cwiseMax(-control_limit).cwiseMin(control_limit);
    }
    z = models.Forward(u) + z;
    rollout.cost += (z - trajectory[nearest + k + 1]).norm();
    rollout.controls.push_back(std::move(u));
    rollout.states.push_back(z);
  }
  return rollout;
}

MpcStepResult MpcStep(const MotionModel& models, const Vec3& z,
                      const Vec3& from, const Vec3& to,
                      const MpcConfig& config, uint64_t seed,
                      bool keep_rollouts) {
  config.Validate();
  IntermediateTrajectory trajectory =
      Interpolate(from, to, config.waypoint_spacing);

  MpcStepResult result;
  result.nearest = NearestWaypoint(trajectory, z);
  std::size_t remaining = trajectory.size() - 1 - result.nearest;
  result.horizon =
      static_cast<int>(std::min<std::size_t>(config.horizon, remaining));

  if (result.horizon == 0) {
    result.at_final_waypoint = true;
    result.control = Control::Zero(models.control_dim());
    result.best_cost = (z - trajectory[result.nearest]).norm();
    return result;
  }

  if (keep_rollouts) result.rollouts.reserve(config.num_rollouts);
  for (int q = 0; q < config.num_rollouts; ++q) {
    std::mt19937_64 rng(MixSeed(seed + static_cast<uint64_t>(q)));
    Rollout rollout = SimulateRollout(models, trajectory, result.nearest, z,
                                      result.horizon, config.sigma, rng,
                                      config.control_limit);
    // strict comparison: ties keep the lowest q
    if (q == 0 || rollout.cost < result.best_cost) {
      result.best_cost = rollout.cost;
      result.best_rollout = q;
      result.control = rollout.controls.front();
    }
    if (keep_rollouts) result.rollouts.push_back(std::move(rollout));
  }
  return result;
}

void WriteRolloutHeader(std::ostream& out) {
  out << "# schema=1 rollouts\n";
  out << "step,q,cost,best,k,x,y,z\n";
}

void WriteRollouts(std::ostream& out, int step, const MpcStepResult& result) {
  for (std::size_t q = 0; q < result.rollouts.size(); ++q) {
    const Rollout& r = result.rollouts[q];
    int best = static_cast<int>(q) == result.best_rollout ? 1 : 0;
    for (std::size_t k = 0; k < r.states.size(); ++k) {
      out << step << ',' << q << ',' << FormatDouble(r.cost) << ',' << best
          << ',' << k << ',' << FormatDouble(r.states[k].x()) << ','
          << FormatDouble(r.states[k].y()) << ','
          << FormatDouble(r.states[k].z()) << '\n';
    }
  }
}

}  // namespace selfid
