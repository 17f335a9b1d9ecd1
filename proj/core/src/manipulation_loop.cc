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

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include <fmt/format.h>

#include "selfid/text_io.h"

namespace selfid {
namespace {

// coincident keypoint threshold, mm
constexpr double kCoincident = 1e-9;

// independent substreams of the task seed
constexpr uint64_t kExplorationStream = 0x45585052ULL;
constexpr uint64_t kControlStream = 0x4d504353ULL;

void FinalizeMetrics(TaskResult& result) {
  result.steps_used = static_cast<int>(result.steps.size());
  double sum = 0.0;
  for (const StepRecord& s : result.steps) sum += s.error;
  result.mean_error = result.steps.empty() ? 0.0 : sum / result.steps.size();
}

}  // namespace

void ReferenceTrajectory::Validate() const {
  if (keypoints.empty()) {
    throw std::invalid_argument("reference trajectory has no keypoints");
  }
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (!keypoints[i].allFinite()) {
      throw std::invalid_argument(
          fmt::format("reference keypoint {} is not finite", i));
    }
    if (i > 0 && (keypoints[i] - keypoints[i - 1]).norm() <= kCoincident) {
      throw std::invalid_argument(
          fmt::format("reference keypoints {} and {} coincide", i - 1, i));
    }
  }
}

void LoopConfig::Validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("loop: alpha must be > 0");
  if (!(gamma > alpha)) {
    throw std::invalid_argument("loop: gamma must be greater than alpha");
  }
  if (max_steps < 1) throw std::invalid_argument("loop: max_steps must be >= 1");
  exploration.Validate();
  mpc.Validate();
}

double ManipulationError(const Vec3& z, const IntermediateTrajectory& segment) {
  return (z - segment[NearestWaypoint(segment, z)]).norm();
}

TaskResult RunTask(Plant& plant, const ReferenceTrajectory& reference,
                   const LoopConfig& config,
                   const std::optional<Dataset>& transferred,
                   const MpcObserver& observer) {
  config.Validate();
  reference.Validate();
  const ExplorationConfig& exploration = config.exploration;
  if (plant.control_dim() != exploration.control_dim) {
    throw std::invalid_argument(
        fmt::format("plant has C={}, configuration C={}", plant.control_dim(),
                    exploration.control_dim));
  }
  if (!transferred && exploration.initial_actions() < 2) {
    throw std::invalid_argument(
        "initial identification needs at least two actions (d + a >= 2)");
  }

  std::mt19937_64 explore_rng(MixSeed(config.seed ^ kExplorationStream));
  std::mt19937_64 control_rng(MixSeed(config.seed ^ kControlStream));

  TaskResult result;
  result.trajectory = reference.name;

  MpcConfig mpc_config = config.mpc;
  if (config.limit_controls) {
    mpc_config.control_limit =
        std::min(mpc_config.control_limit, exploration.exploration_range);
  }


  Dataset dataset(exploration.control_dim, exploration.capacity);
  std::optional<ManipulationModels> models;
  try {
    if (transferred) {
      Transfer t = TransferModels(*transferred, exploration);
      models.emplace(std::move(t.models));
      dataset = std::move(t.dataset);
    } else {
      Identification id = SelfIdentify(plant, exploration, dataset,
                                       IdentifyMode::kInitial, explore_rng);
      for (ExploratoryAction& a : id.actions) {
        result.exploration.push_back(
            {ExplorationPhase::kInitial, -1, std::move(a)});
      }
      result.initial_action_count = static_cast<int>(id.actions.size());
      models.emplace(std::move(id.models));
    }
  } catch (const std::exception& e) {
    result.initial_action_count = static_cast<int>(result.exploration.size());
    FinalizeMetrics(result);
    throw TaskError(fmt::format("initial identification failed: {}", e.what()),
                    std::move(result));
  }
  result.initial_dataset = dataset;

  // x_0 is where the object rests once exploration is over
  Vec3 z = plant.Observe();
  std::vector<Vec3> keypoints;
  keypoints.reserve(reference.keypoints.size() + 1);
  keypoints.push_back(z);
  keypoints.insert(keypoints.end(), reference.keypoints.begin(),
                   reference.keypoints.end());

  int step = 0;
  bool just_updated = false;
  bool out_of_steps = false;
  for (std::size_t i = 1; i < keypoints.size() && !out_of_steps; ++i) {
    const Vec3& from = keypoints[i - 1];
    const Vec3& to = keypoints[i];
    IntermediateTrajectory segment =
        Interpolate(from, to, mpc_config.waypoint_spacing);

    while ((to - z).norm() > config.alpha) {
      if (step >= config.max_steps) {
        out_of_steps = true;
        break;
      }
      uint64_t seed = control_rng();
      const bool keep = static_cast<bool>(observer);
      MpcStepResult mpc = MpcStep(*models, z, from, to, mpc_config, seed, keep);
      if (mpc.at_final_waypoint) {
        // past the segment end but outside alpha: aim straight at the
        // keypoint from where the object is now
        mpc = MpcStep(*models, z, z, to, mpc_config, seed, keep);
      }
      if (observer) observer(step, mpc);
      z = plant.Execute(mpc.control);

      StepRecord record;
      record.step = step;
      record.keypoint = static_cast<int>(i);
      record.control = mpc.control;
      record.position = z;
      record.error = ManipulationError(z, segment);

      bool trigger = record.error > config.gamma && !just_updated;
      record.update = trigger;
      result.steps.push_back(record);
      ++step;

      if (!trigger) {
        just_updated = false;
        continue;
      }
      try {
        Identification id = SelfIdentify(plant, exploration, dataset,
                                         IdentifyMode::kAdapt, explore_rng);
        for (ExploratoryAction& a : id.actions) {
          result.exploration.push_back(
              {ExplorationPhase::kAdapting, record.step, std::move(a)});
          ++result.adapting_action_count;
        }
        models.emplace(std::move(id.models));
      } catch (const std::exception& e) {
        FinalizeMetrics(result);
        result.final_dataset = dataset;
        throw TaskError(fmt::format("model update after step {} failed: {}",
                                    record.step, e.what()),
                        std::move(result));
      }
      ++result.update_count;
      just_updated = true;
      z = plant.Observe();
    }
    if (!out_of_steps) ++result.keypoints_reached;
  }

  result.completed = !out_of_steps;
  result.final_dataset = dataset;
  FinalizeMetrics(result);
  return result;
}

TaskSummary TraceMetrics(const TaskResult& result) {
  TaskSummary summary;
  double sum = 0.0;
  for (const StepRecord& s : result.steps) {
    sum += s.error;
    summary.max_error = std::max(summary.max_error, s.error);
  }
  summary.steps = static_cast<int>(result.steps.size());
  summary.mean_error = summary.steps == 0 ? 0.0 : sum / summary.steps;
  summary.adapting_actions = result.adapting_action_count;
  summary.initial_actions = result.initial_action_count;
  summary.total_exploratory_actions =
      result.adapting_action_count + result.initial_action_count;
  summary.completed = result.completed;
  return summary;
}

void WriteTaskLog(std::ostream& out, const TaskResult& result) {
  int control_dim = result.steps.empty()
                        ? 0
                        : static_cast<int>(result.steps.front().control.size());
  out << "# schema=1 task trajectory=" << result.trajectory << '\n';
  out << "step,keypoint";
  for (int c = 0; c < control_dim; ++c) out << ",u" << c;
  out << ",x,y,z,error,update\n";
  for (const StepRecord& s : result.steps) {
    out << s.step << ',' << s.keypoint;
    for (Eigen::Index c = 0; c < s.control.size(); ++c) {
      out << ',' << FormatDouble(s.control[c]);
    }
    out << ',' << FormatDouble(s.position.x()) << ','
        << FormatDouble(s.position.y()) << ',' << FormatDouble(s.position.z())
        << ',' << FormatDouble(s.error) << ',' << (s.update ? 1 : 0) << '\n';
  }
  TaskSummary summary = TraceMetrics(result);
  out << "# summary mean_error=" << FormatDouble(summary.mean_error)
      << ",max_error=" << FormatDouble(summary.max_error)
      << ",adapting=" << summary.adapting_actions
      << ",initial=" << summary.initial_actions
      << ",updates=" << result.update_count << ",steps=" << summary.steps
      << ",completed=" << (summary.completed ? 1 : 0) << '\n';
}

TaskResult ReadTaskLog(std::istream& in) {
  TaskResult result;
  std::string raw;
  int line_no = 0;
  int control_dim = -1;
  bool schema_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("# schema=")) {
        if (!line.starts_with("# schema=1 task")) {
          throw ParseError(line_no, "unsupported task log schema");
        }
        schema_seen = true;
        auto pos = line.find("trajectory=");
        if (pos != std::string_view::npos) {
          result.trajectory = std::string(line.substr(pos + 11));
        }
      } else if (line.starts_with("# summary ")) {
        for (const std::string& field : SplitFields(line.substr(10), ',')) {
          auto eq = field.find('=');
          if (eq == std::string::npos) throw ParseError(line_no, "bad summary field");
          std::string key = field.substr(0, eq);
          std::string_view value = std::string_view(field).substr(eq + 1);
          if (key == "adapting") {
            result.adapting_action_count = static_cast<int>(ParseInt(value, line_no));
          } else if (key == "initial") {
            result.initial_action_count = static_cast<int>(ParseInt(value, line_no));
          } else if (key == "updates") {
            result.update_count = static_cast<int>(ParseInt(value, line_no));
          } else if (key == "completed") {
            result.completed = ParseInt(value, line_no) != 0;
          }
        }
      }
      continue;
    }
    if (!schema_seen) throw ParseError(line_no, "missing schema header");
    std::vector<std::string> fields = SplitFields(line, ',');
    if (control_dim < 0) {
      // column header
      if (fields.size() < 7 || fields[0] != "step") {
        throw ParseError(line_no, "expected column header");
      }
      control_dim = static_cast<int>(fields.size()) - 7;
      continue;
    }
    if (static_cast<int>(fields.size()) != control_dim + 7) {
      throw ParseError(line_no, fmt::format("expected {} fields, got {}",
                                            control_dim + 7, fields.size()));
    }
    StepRecord s;
    s.step = static_cast<int>(ParseInt(fields[0], line_no));
    s.keypoint = static_cast<int>(ParseInt(fields[1], line_no));
    s.control.resize(control_dim);
    for (int c = 0; c < control_dim; ++c) {
      s.control[c] = ParseDouble(fields[2 + c], line_no);
    }
    s.position = Vec3(ParseDouble(fields[2 + control_dim], line_no),
                      ParseDouble(fields[3 + control_dim], line_no),
                      ParseDouble(fields[4 + control_dim], line_no));
    s.error = ParseDouble(fields[5 + control_dim], line_no);
    s.update = ParseInt(fields[6 + control_dim], line_no) != 0;
    result.steps.push_back(std::move(s));
  }
  if (!schema_seen) throw ParseError(line_no, "missing schema header");
  FinalizeMetrics(result);
  return result;
}

}  // namespace selfid
