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

#ifndef SELFID_TRAJECTORIES_H_
#define SELFID_TRAJECTORIES_H_

#include <string>
#include <string_view>
#include <vector>

#include "selfid/manipulation_loop.h"

namespace selfid {

std::vector<std::string> TrajectoryNames();

// Planar reference shapes in the z = origin.z plane, each inside a
// scale x scale box, first keypoint at `origin` (s = scale):
//   triangle  (0,0) (s,0) (s/2, s sqrt(3)/2) (0,0)
//   square    (0,0) (s,0) (s,s) (0,s) (0,0)
//   pi        pen path over the glyph, relative to the left foot:
//             (0,0) (0,.45s) (0,.9s) (-.25s,.9s) (.25s,.9s) (.75s,.9s)
//             (.5s,.9s) (.5s,.45s) (.5s,0)
//   spiral    Archimedean, r_k = (s/2) k/(n-1), theta_k = 3 pi k/(n-1),
//             k = 0..n-1 with n = 16: (r_k cos theta_k, r_k sin theta_k)
// Throws std::invalid_argument for an unknown name or scale <= 0.
ReferenceTrajectory MakeTrajectory(std::string_view name, double scale,
                                   const Vec3& origin = Vec3::Zero());

}  // namespace selfid

#endif  // SELFID_TRAJECTORIES_H_
