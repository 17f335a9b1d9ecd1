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

// Task executor: identify the local models, then drive the point of
// manipulation through every keypoint with MPC, refitting the models with
// adapting actions whenever the tracking error exceeds gamma.

#ifndef SELFID_MANIPULATION_LOOP_H_
#define SELFID_MANIPULATION_LOOP_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfid/mpc_controller.h"
#include "selfid/self_identification.h"
#include "selfid/types.h"

namespace selfid {

struct ReferenceTrajectory {
  std::string name;
  std::vector<Vec3> keypoints;  // absolute positions, mm

  // throws std::invalid_argument: empty, non-finite, or coincident
  // consecutive keypoints
  void Validate() const;
};

struct LoopConfig {
  double alpha = 1.0;  // keypoint reach tolerance, mm
  double gamma = 2.0;  // model update threshold, mm; +inf disables updates
  int max_steps = 2000;
  // bound MPC controls by the exploration range, where the models have data
  bool limit_controls = true;
  ExplorationConfig exploration;
  MpcConfig mpc;
  uint64_t seed = 0;

  // throws std::invalid_argument
  void Validate() const;
};

struct StepRecord {
  int step = 0;
  int keypoint = 0;  // index into the augmented keypoint list (x_0 = z_0)
  Control control;
  Vec3 position = Vec3::Zero();  // observed after the control
  double error = 0.0;            // manipulation error on the active segment
  bool update = false;           // adapting actions followed this step
};

enum class ExplorationPhase { kInitial, kAdapting };

struct LoggedAction {
  ExplorationPhase phase = ExplorationPhase::kInitial;
  int after_step = -1;  // control step that triggered it, -1 for initial
  ExploratoryAction action;
};

struct TaskResult {
  std::string trajectory;
  std::vector<StepRecord> steps;
  std::vector<LoggedAction> exploration;
  int initial_action_count = 0;
  int adapting_action_count = 0;
  int update_count = 0;
  int keypoints_reached = 0;
  double mean_error = 0.0;
  bool completed = false;
  int steps_used = 0;
  // dataset right after the initial identification (or transfer)
  std::optional<Dataset> initial_dataset;
  std::optional<Dataset> final_dataset;
};

// Identification failure inside a task; carries the partial log.
class TaskError : public std::runtime_error {
 public:
  TaskError(const std::string& what, TaskResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const TaskResult& partial() const { return partial_; }

 private:
  TaskResult partial_;
};

// |z - w_j*| with j* the nearest waypoint.
double ManipulationError(const Vec3& z, const IntermediateTrajectory& segment);

// Runs one task. Without `transferred`, the loop starts with an initial
// identification of d + a actions; with it, the models are fitted from that
// dataset and no initial actions are executed.
// Receives every executed MPC step with all rollouts retained.
using MpcObserver = std::function<void(int step, const MpcStepResult& result)>;

TaskResult RunTask(Plant& plant, const ReferenceTrajectory& reference,
                   const LoopConfig& config,
                   const std::optional<Dataset>& transferred = std::nullopt,
                   const MpcObserver& observer = nullptr);

struct TaskSummary {
  double mean_error = 0.0;
  double max_error = 0.0;
  int adapting_actions = 0;
  int initial_actions = 0;
  int total_exploratory_actions = 0;
  int steps = 0;
  bool completed = false;
};

TaskSummary TraceMetrics(const TaskResult& result);

// Per-step log:
//   # schema=1 task
//   step,keypoint,u_1..u_C,x,y,z,error,update
//   ...
//   # summary mean_error=..,max_error=..,adapting=..,initial=..,steps=..,completed=..
void WriteTaskLog(std::ostream& out, const TaskResult& result);
// Reads the step records back (exploration records are not part of the log).
// The summary line fills the counters. Throws ParseError.
TaskResult ReadTaskLog(std::istream& in);

}  // namespace selfid

#endif  // SELFID_MANIPULATION_LOOP_H_
