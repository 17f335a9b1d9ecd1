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

#include "selfid/manipulation_loop.h"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.h"
#include "selfid/experiment.h"
#include "selfid/plant_sim.h"
#include "selfid/text_io.h"
#include "selfid/trajectories.h"

namespace selfid {
namespace {

using testing::CountingPlant;

// Shifts every observation by `kick` from the `at`-th Execute call onward.
class KickedPlant : public Plant {
 public:
  KickedPlant(Plant& inner, int64_t at, Vec3 kick)
      : inner_(inner), at_(at), kick_(kick) {}
  int control_dim() const override { return inner_.control_dim(); }
  Vec3 Observe() const override { return inner_.Observe() + offset_; }
  Vec3 Execute(const Control& u) override {
    if (++calls_ == at_) offset_ += kick_;
    return inner_.Execute(u) + offset_;
  }
  int64_t executions() const override { return inner_.executions(); }

 private:
  Plant& inner_;
  int64_t at_;
  Vec3 kick_;
  Vec3 offset_ = Vec3::Zero();
  int64_t calls_ = 0;
};

// Throws on the `at`-th Execute call.
class FailingPlant : public Plant {
 public:
  FailingPlant(Plant& inner, int64_t at) : inner_(inner), at_(at) {}
  int control_dim() const override { return inner_.control_dim(); }
  Vec3 Observe() const override { return inner_.Observe(); }
  Vec3 Execute(const Control& u) override {
    if (++calls_ == at_) throw std::runtime_error("actuator fault");
    return inner_.Execute(u);
  }
  int64_t executions() const override { return inner_.executions(); }

 private:
  Plant& inner_;
  int64_t at_;
  int64_t calls_ = 0;
};

std::string LogText(const TaskResult& r) {
  std::ostringstream out;
  WriteTaskLog(out, r);
  return out.str();
}

Dataset IdentifiedDataset(const PlantPreset& preset, uint64_t seed) {
  SyntheticPlant plant(preset, seed);
  ExplorationConfig config;
  Dataset dataset(2, config.capacity);
  std::mt19937_64 rng(seed);
  SelfIdentify(plant, config, dataset, IdentifyMode::kInitial, rng);
  return dataset;
}

struct SquareRun {
  TaskResult result;
  int64_t calls = 0;
  int64_t executions = 0;
};

SquareRun RunSquare(const PlantPreset& preset, uint64_t seed, const LoopConfig& base) {
  SyntheticPlant plant(preset, seed);
  CountingPlant counted(plant);
  LoopConfig config = base;
  config.seed = seed;
  ReferenceTrajectory square = MakeTrajectory("square", 16.0, plant.Observe());
  SquareRun run;
  run.result = RunTask(counted, square, config);
  run.calls = counted.calls();
  run.executions = plant.executions();
  return run;
}

TEST(ManipulationErrorTest, ZeroOnAWaypoint) {
  IntermediateTrajectory w = Interpolate(Vec3(0, 0, 0), Vec3(10, 0, 0), 0.5);
  EXPECT_EQ(ManipulationError(w[7], w), 0.0);
}

TEST(ManipulationErrorTest, StraightLineExample) {
  IntermediateTrajectory w = Interpolate(Vec3(0, 0, 0), Vec3(10, 0, 0), 0.5);
  ASSERT_EQ(w.size(), 21u);
  EXPECT_NEAR(ManipulationError(Vec3(3.5, 2, 0), w), 2.0, 1e-12);
  // brute force over the grid
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : w.waypoints) best = std::min(best, (Vec3(3.5, 2, 0) - p).norm());
  EXPECT_NEAR(ManipulationError(Vec3(3.5, 2, 0), w), best, 1e-15);
}

TEST(ManipulationErrorTest, LateralDriftExceedsThreshold) {
  IntermediateTrajectory w = Interpolate(Vec3(0, 0, 0), Vec3(10, 0, 0), 0.5);
  EXPECT_GT(ManipulationError(Vec3(5, 2.5, 0), w), LoopConfig{}.gamma);
}

TEST(TraceMetricsTest, EmptyAndArithmetic) {
  TaskResult empty;
  TaskSummary s = TraceMetrics(empty);
  EXPECT_EQ(s.mean_error, 0.0);
  EXPECT_EQ(s.steps, 0);

  TaskResult three;
  for (double e : {1.0, 2.0, 3.0}) {
    StepRecord r;
    r.error = e;
    three.steps.push_back(r);
  }
  three.initial_action_count = 20;
  three.adapting_action_count = 6;
  s = TraceMetrics(three);
  EXPECT_DOUBLE_EQ(s.mean_error, 2.0);
  EXPECT_DOUBLE_EQ(s.max_error, 3.0);
  EXPECT_EQ(s.steps, 3);
  EXPECT_EQ(s.total_exploratory_actions, 26);
}

TEST(LoopConfigTest, Validation) {
  LoopConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.gamma = c.alpha;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = LoopConfig{};
  c.alpha = 0.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = LoopConfig{};
  c.max_steps = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = LoopConfig{};
  c.gamma = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(c.Validate());
}

TEST(RunTaskTest, RejectsBadInputs) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 1);
  LoopConfig config;
  ReferenceTrajectory empty;
  EXPECT_THROW(RunTask(plant, empty, config), std::invalid_argument);
  ReferenceTrajectory coincident{"c", {Vec3(1, 0, 0), Vec3(1, 0, 0)}};
  EXPECT_THROW(RunTask(plant, coincident, config), std::invalid_argument);
  ReferenceTrajectory ok{"ok", {Vec3(1, 0, 0)}};
  config.exploration.control_dim = 3;
  EXPECT_THROW(RunTask(plant, ok, config), std::invalid_argument);
  config = LoopConfig{};
  config.exploration.random_actions = 1;
  config.exploration.extra_actions = 0;
  EXPECT_THROW(RunTask(plant, ok, config), std::invalid_argument);
  EXPECT_EQ(plant.executions(), 0);
}

TEST(RunTaskTest, SingleKeypointAtStartNeedsNoSteps) {
  Dataset saved = IdentifiedDataset(BuiltinPreset("preset-4"), 3);
  SyntheticPlant plant(BuiltinPreset("preset-1"), 4);
  ReferenceTrajectory here{"here", {plant.Observe()}};
  TaskResult r = RunTask(plant, here, LoopConfig{}, saved);
  EXPECT_TRUE(r.completed);
  EXPECT_EQ(r.steps_used, 0);
  EXPECT_EQ(r.mean_error, 0.0);
  EXPECT_EQ(r.initial_action_count, 0);
  EXPECT_EQ(plant.executions(), 0);
}

TEST(RunTaskTest, LinearPlantTracksSquare) {
  PlantPreset linear = testing::LinearPreset(testing::TestJacobian());
  SquareRun run = RunSquare(linear, 5, LoopConfig{});
  EXPECT_TRUE(run.result.completed);
  EXPECT_EQ(run.result.keypoints_reached, 5);
  EXPECT_LT(run.result.mean_error, 0.5);
}

TEST(RunTaskTest, LateralKickTriggersUpdate) {
  PlantPreset linear = testing::LinearPreset(testing::TestJacobian());
  SyntheticPlant inner(linear, 6);
  LoopConfig config;
  config.seed = 6;
  // first control step after the 20 initial actions
  KickedPlant plant(inner, config.exploration.initial_actions() + 1, Vec3(0, 2.5, 0));
  ReferenceTrajectory line{"line", {inner.Observe() + Vec3(10, 0, 0)}};
  TaskResult r = RunTask(plant, line, config);
  ASSERT_FALSE(r.steps.empty());
  EXPECT_GT(r.steps[0].error, config.gamma);
  EXPECT_TRUE(r.steps[0].update);
  EXPECT_GE(r.update_count, 1);
  EXPECT_EQ(r.adapting_action_count, config.exploration.adapting_actions * r.update_count);
}

TEST(RunTaskTest, StopsAtMaxSteps) {
  LoopConfig config;
  config.max_steps = 3;
  SquareRun run = RunSquare(BuiltinPreset("preset-4"), 2, config);
  EXPECT_FALSE(run.result.completed);
  EXPECT_EQ(run.result.steps_used, 3);
  EXPECT_LT(run.result.keypoints_reached, 5);
}

TEST(RunTaskTest, LogInvariantsOnSeededRuns) {
  for (const std::string& preset : {"preset-4", "preset-5"}) {
    for (uint64_t seed : {1u, 2u, 3u}) {
      LoopConfig config;
      config.mpc.sigma = 0.005;
      SquareRun run = RunSquare(BuiltinPreset(preset), seed, config);
      const TaskResult& r = run.result;
      const ExplorationConfig& ex = config.exploration;
      SCOPED_TRACE(preset + " seed " + std::to_string(seed));

      // budget accounting, counted independently of the plant
      EXPECT_EQ(run.calls, r.steps_used + r.initial_action_count + r.adapting_action_count);
      EXPECT_EQ(run.executions, run.calls);
      EXPECT_EQ(r.initial_action_count, ex.initial_actions());
      EXPECT_EQ(r.adapting_action_count, ex.adapting_actions * r.update_count);

      // trigger soundness with the one-step guard
      std::map<int, int> adapting_after;
      for (const LoggedAction& a : r.exploration) {
        if (a.phase == ExplorationPhase::kAdapting) ++adapting_after[a.after_step];
      }
      bool previous_update = false;
      int updates = 0;
      for (const StepRecord& s : r.steps) {
        bool expected = s.error > config.gamma && !previous_update;
        EXPECT_EQ(s.update, expected) << "step " << s.step;
        EXPECT_EQ(adapting_after[s.step], s.update ? ex.adapting_actions : 0);
        updates += s.update;
        previous_update = s.update;
      }
      EXPECT_EQ(updates, r.update_count);

      // keypoint order: advance only after the previous keypoint was reached
      ReferenceTrajectory square = MakeTrajectory(
          "square", 16.0, SyntheticPlant(BuiltinPreset(preset), seed).Observe());
      ASSERT_FALSE(r.exploration.empty());
      Vec3 z = r.exploration[ex.initial_actions() - 1].action.position_after;
      for (std::size_t k = 0; k < r.steps.size(); ++k) {
        const StepRecord& s = r.steps[k];
        if (k > 0 && s.keypoint != r.steps[k - 1].keypoint) {
          EXPECT_EQ(s.keypoint, r.steps[k - 1].keypoint + 1);
          const Vec3& target = square.keypoints[r.steps[k - 1].keypoint - 1];
          EXPECT_LE((target - z).norm(), config.alpha) << "step " << s.step;
        }
        z = s.position;
        if (s.update) {
          for (const LoggedAction& a : r.exploration) {
            if (a.after_step == s.step) z = a.action.position_after;
          }
        }
      }

      // metric consistency
      double sum = 0.0;
      double max = 0.0;
      for (const StepRecord& s : r.steps) {
        sum += s.error;
        max = std::max(max, s.error);
      }
      TaskSummary summary = TraceMetrics(r);
      EXPECT_DOUBLE_EQ(summary.mean_error, r.steps.empty() ? 0.0 : sum / r.steps.size());
      EXPECT_DOUBLE_EQ(r.mean_error, summary.mean_error);
      EXPECT_EQ(summary.max_error, max);
      EXPECT_EQ(summary.steps, r.steps_used);
    }
  }
}

TEST(RunTaskTest, DeterministicLogs) {
  LoopConfig config;
  SquareRun a = RunSquare(BuiltinPreset("preset-2"), 9, config);
  SquareRun b = RunSquare(BuiltinPreset("preset-2"), 9, config);
  EXPECT_EQ(LogText(a.result), LogText(b.result));
  SquareRun c = RunSquare(BuiltinPreset("preset-2"), 10, config);
  EXPECT_NE(LogText(a.result), LogText(c.result));
}

TEST(RunTaskTest, NearLinearPresetEndToEnd) {
  LoopConfig config;
  for (int rep = 0; rep < 5; ++rep) {
    uint64_t seed = RunSeed(0, 20, "square", "preset-4", rep);
    SquareRun run = RunSquare(BuiltinPreset("preset-4"), seed, config);
    EXPECT_TRUE(run.result.completed) << rep;
    EXPECT_LE(run.result.mean_error, 1.0) << rep;
    EXPECT_LE(run.result.adapting_action_count, 2 * config.exploration.adapting_actions)
        << rep;
  }
}

TEST(RunTaskTest, TransferSkipsInitialIdentification) {
  Dataset saved = IdentifiedDataset(BuiltinPreset("preset-4"), 12);
  SyntheticPlant plant(BuiltinPreset("preset-2"), 13);
  CountingPlant counted(plant);
  LoopConfig config;
  config.seed = 13;
  ReferenceTrajectory square = MakeTrajectory("square", 16.0, plant.Observe());
  TaskResult r = RunTask(counted, square, config, saved);
  EXPECT_EQ(r.initial_action_count, 0);
  for (const LoggedAction& a : r.exploration) {
    EXPECT_EQ(a.phase, ExplorationPhase::kAdapting);
  }
  ASSERT_TRUE(r.initial_dataset.has_value());
  EXPECT_EQ(r.initial_dataset->size(), saved.size());
  EXPECT_EQ(counted.calls(), r.steps_used + r.adapting_action_count);
}

TEST(RunTaskTest, IdentificationFailureCarriesPartialResult) {
  SyntheticPlant inner(BuiltinPreset("preset-4"), 1);
  FailingPlant plant(inner, 5);
  ReferenceTrajectory line{"line", {Vec3(5, 0, 0)}};
  try {
    RunTask(plant, line, LoopConfig{});
    FAIL() << "expected TaskError";
  } catch (const TaskError& e) {
    EXPECT_NE(std::string(e.what()).find("actuator fault"), std::string::npos);
    EXPECT_TRUE(e.partial().steps.empty());
    EXPECT_FALSE(e.partial().completed);
  }
}

TEST(RunTaskTest, PlantFailureDuringControlPropagates) {
  SyntheticPlant inner(BuiltinPreset("preset-4"), 1);
  LoopConfig config;
  FailingPlant plant(inner, config.exploration.initial_actions() + 2);
  ReferenceTrajectory line{"line", {inner.Observe() + Vec3(10, 0, 0)}};
  EXPECT_THROW(RunTask(plant, line, config), std::runtime_error);
}

TEST(TaskLogTest, RoundTrip) {
  SquareRun run = RunSquare(BuiltinPreset("preset-3"), 4, LoopConfig{});
  std::string text = LogText(run.result);
  std::istringstream in(text);
  TaskResult back = ReadTaskLog(in);
  ASSERT_EQ(back.steps.size(), run.result.steps.size());
  for (std::size_t i = 0; i < back.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].control, run.result.steps[i].control);
    EXPECT_EQ(back.steps[i].position, run.result.steps[i].position);
    EXPECT_EQ(back.steps[i].error, run.result.steps[i].error);
    EXPECT_EQ(back.steps[i].update, run.result.steps[i].update);
    EXPECT_EQ(back.steps[i].keypoint, run.result.steps[i].keypoint);
  }
  EXPECT_EQ(back.trajectory, "square");
  EXPECT_EQ(back.update_count, run.result.update_count);
  TaskSummary a = TraceMetrics(back);
  TaskSummary b = TraceMetrics(run.result);
  EXPECT_EQ(a.mean_error, b.mean_error);
  EXPECT_EQ(a.adapting_actions, b.adapting_actions);
  EXPECT_EQ(a.initial_actions, b.initial_actions);
  EXPECT_EQ(a.completed, b.completed);
  EXPECT_EQ(LogText(back), text);
}

TEST(TaskLogTest, ParseErrors) {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      ReadTaskLog(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("step,keypoint\n"), 1);
  EXPECT_EQ(line_of("# schema=2 task\n"), 1);
  EXPECT_EQ(line_of("# schema=1 task\nstep,keypoint,u0,u1,x,y,z,error,update\n0,1,0,0,0\n"),
            3);
  EXPECT_EQ(line_of("# schema=1 task\nstep,keypoint,u0,u1,x,y,z,error,update\n"
                    "0,1,0,0,0,0,0,abc,0\n"),
            3);
}

// Paired-seed comparison of updates on the drifting preset. Disabled: on
// this plant the adapting actions raise the tracking error instead of
// lowering it (see README, "Known limitations").
TEST(RunTaskTest, DISABLED_UpdatesLowerErrorOnDriftingPreset) {
  int better = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    LoopConfig enabled;
    LoopConfig disabled;
    disabled.gamma = std::numeric_limits<double>::infinity();
    double with = RunSquare(BuiltinPreset("preset-5"), seed, enabled).result.mean_error;
    double without = RunSquare(BuiltinPreset("preset-5"), seed, disabled).result.mean_error;
    better += with < without;
  }
  EXPECT_GE(better, 4);
}

}  // namespace
}  // namespace selfid
