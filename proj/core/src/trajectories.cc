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

#include "selfid/trajectories.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace selfid {
namespace {

constexpr int kSpiralKeypoints = 16;
constexpr double kSpiralTurns = 1.5;

}  // namespace

std::vector<std::string> TrajectoryNames() {
  return {"triangle", "square", "pi", "spiral"};
}

ReferenceTrajectory MakeTrajectory(std::string_view name, double scale,
                                   const Vec3& origin) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument(
        fmt::format("trajectory scale must be positive, got {}", scale));
  }
  const double s = scale;
  std::vector<Eigen::Vector2d> shape;
  if (name == "triangle") {
    shape = {{0, 0}, {s, 0}, {0.5 * s, 0.5 * std::sqrt(3.0) * s}, {0, 0}};
  } else if (name == "square") {
    shape = {{0, 0}, {s, 0}, {s, s}, {0, s}, {0, 0}};
  } else if (name == "pi") {
    shape = {{0, 0},           {0, 0.45 * s},      {0, 0.9 * s},
             {-0.25 * s, 0.9 * s}, {0.25 * s, 0.9 * s}, {0.75 * s, 0.9 * s},
             {0.5 * s, 0.9 * s},   {0.5 * s, 0.45 * s}, {0.5 * s, 0}};
  } else if (name == "spiral") {
    const double theta_max = 2.0 * std::numbers::pi * kSpiralTurns;
    for (int k = 0; k < kSpiralKeypoints; ++k) {
      double t = static_cast<double>(k) / (kSpiralKeypoints - 1);
      double r = 0.5 * s * t;
      double theta = theta_max * t;
      shape.emplace_back(r * std::cos(theta), r * std::sin(theta));
    }
  } else {
    throw std::invalid_argument(fmt::format("unknown trajectory '{}'", name));
  }

  ReferenceTrajectory trajectory;
  trajectory.name = std::string(name);
  for (const Eigen::Vector2d& p : shape) {
    trajectory.keypoints.push_back(origin + Vec3(p.x(), p.y(), 0.0));
  }
  return trajectory;
}

}  // namespace selfid
