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

// selfid: run manipulation tasks and experiment sweeps on the synthetic plant.
//
//   selfid run            one task, writes task.csv (and rollouts.csv)
//   selfid sweep-initial  initial exploratory action sweep
//   selfid sweep-sigma    MPC optimization scale sweep
//   selfid transfer       dataset transfer from the first preset to the rest
//   selfid plotdata       per-value table from a report.csv
//
// Exit status: 0 success, 1 usage or I/O error, 2 some runs failed or did
// not complete.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "selfid/experiment.h"
#include "selfid/manipulation_loop.h"
#include "selfid/plant_sim.h"
#include "selfid/self_identification.h"
#include "selfid/trajectories.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

constexpr const char* kOutputEnv = "SELFID_OUTPUT_DIR";

struct Options {
  selfid::LoopConfig loop;
  std::size_t capacity = 100;  // 0 = unbounded
  std::string output = "selfid_out";
  std::string preset_file;
  std::vector<std::string> presets;
  std::vector<std::string> trajectories;
  std::vector<double> values;
  double scale = 16.0;
  int repetitions = 5;
  uint64_t seed_base = 0;
  int jobs = 1;
  // run
  std::string trajectory = "square";
  std::string preset = "preset-4";
  std::string dataset_in;
  std::string rollout_dump;
  // plotdata
  std::string report;
};

void AddLoopFlags(CLI::App& app, Options& o) {
  selfid::LoopConfig& c = o.loop;
  app.add_option("--alpha", c.alpha, "keypoint reach tolerance, mm");
  app.add_option("--gamma", c.gamma, "model update threshold, mm (inf disables)");
  app.add_option("--max_steps", c.max_steps, "control step cap per task");
  app.add_option("--random_actions", c.exploration.random_actions, "d");
  app.add_option("--extra_actions", c.exploration.extra_actions, "a");
  app.add_option("--adapting_actions", c.exploration.adapting_actions, "b");
  app.add_option("--exploration_range", c.exploration.exploration_range,
                 "exploratory control bound");
  app.add_option("--capacity", o.capacity, "dataset FIFO capacity, 0 = unbounded");
  app.add_option("--forward_length_scale", c.exploration.forward_length_scale,
                 "0 = automatic");
  app.add_option("--inverse_length_scale", c.exploration.inverse_length_scale,
                 "0 = automatic");
  app.add_option("--noise_jitter", c.exploration.noise_jitter);
  app.add_option("--horizon", c.mpc.horizon, "K");
  app.add_option("--num_rollouts", c.mpc.num_rollouts, "Q");
  app.add_option("--sigma", c.mpc.sigma, "perturbation variance");
  app.add_option("--waypoint_spacing", c.mpc.waypoint_spacing, "mm");
  app.add_option("--output", o.output, "output directory")->envname(kOutputEnv);
  app.add_option("--preset-file", o.preset_file, "INI file with extra presets");
  app.add_option("--scale", o.scale, "trajectory size, mm");
}

std::vector<selfid::PlantPreset> ResolvePresets(const Options& o,
                                                const std::vector<std::string>& names) {
  std::vector<selfid::PlantPreset> extra;
  if (!o.preset_file.empty()) extra = selfid::LoadPresets(o.preset_file);
  std::vector<selfid::PlantPreset> out;
  for (const std::string& name : names) {
    auto it = std::find_if(extra.begin(), extra.end(),
                           [&](const selfid::PlantPreset& p) { return p.name == name; });
    out.push_back(it != extra.end() ? *it : selfid::BuiltinPreset(name));
  }
  return out;
}

selfid::LoopConfig FinalConfig(const Options& o) {
  selfid::LoopConfig c = o.loop;
  c.exploration.capacity =
      o.capacity > 0 ? std::optional<std::size_t>(o.capacity) : std::nullopt;
  return c;
}

int RunSingle(const Options& o) {
  namespace fs = std::filesystem;
  selfid::PlantPreset preset = ResolvePresets(o, {o.preset}).front();
  selfid::LoopConfig config = FinalConfig(o);
  config.exploration.control_dim = preset.control_dim();
  config.seed = o.seed_base;

  fs::create_directories(o.output);
  std::ofstream log(fs::path(o.output) / "task.csv");
  if (!log) throw std::runtime_error("cannot write into " + o.output);

  std::optional<selfid::Dataset> transferred;
  if (!o.dataset_in.empty()) transferred = selfid::LoadDataset(o.dataset_in);

  std::ofstream dump;
  selfid::MpcObserver observer;
  if (!o.rollout_dump.empty()) {
    dump.open(o.rollout_dump);
    if (!dump) throw std::runtime_error("cannot write " + o.rollout_dump);
    selfid::WriteRolloutHeader(dump);
    observer = [&dump](int step, const selfid::MpcStepResult& r) {
      selfid::WriteRollouts(dump, step, r);
    };
  }

  selfid::SyntheticPlant plant(preset, config.seed);
  selfid::ReferenceTrajectory reference =
      selfid::MakeTrajectory(o.trajectory, o.scale, plant.Observe());
  selfid::TaskResult result;
  int status = kExitOk;
  try {
    result = selfid::RunTask(plant, reference, config, transferred, observer);
  } catch (const selfid::TaskError& e) {
    std::cerr << "task failed: " << e.what() << '\n';
    result = e.partial();
    status = kExitPartial;
  }
  selfid::WriteTaskLog(log, result);
  if (result.initial_dataset) {
    selfid::SaveDataset((fs::path(o.output) / "dataset.csv").string(),
                        *result.initial_dataset);
  }
  selfid::TaskSummary s = selfid::TraceMetrics(result);
  fmt::print("trajectory={} preset={} seed={} completed={} steps={} "
             "mean_error={:.4f} max_error={:.4f} initial={} adapting={}\n",
             o.trajectory, preset.name, config.seed, s.completed, s.steps,
             s.mean_error, s.max_error, s.initial_actions, s.adapting_actions);
  if (!s.completed) status = kExitPartial;
  return status;
}

int RunSweep(const Options& o, selfid::ExperimentKind kind) {
  selfid::ExperimentSpec spec;
  spec.kind = kind;
  spec.sweep_values = o.values;
  spec.trajectories = o.trajectories;
  spec.repetitions = o.repetitions;
  spec.seed_base = o.seed_base;
  spec.output_path = o.output;
  spec.base = FinalConfig(o);
  spec.scale = o.scale;
  spec.jobs = o.jobs;

  std::vector<std::string> presets = o.presets;
  if (presets.empty()) {
    switch (kind) {
      case selfid::ExperimentKind::kSigmaSweep:
        presets = {"preset-5"};
        break;
      case selfid::ExperimentKind::kTransfer:
        presets = {"preset-4", "preset-1", "preset-2", "preset-3", "preset-5"};
        break;
      default:
        presets = {"preset-4"};
    }
  }
  spec.presets = ResolvePresets(o, presets);
  if (spec.trajectories.empty()) spec.trajectories = selfid::TrajectoryNames();
  if (spec.sweep_values.empty()) {
    switch (kind) {
      case selfid::ExperimentKind::kInitialActionsSweep:
        spec.sweep_values = {10, 15, 20, 25, 30};
        break;
      case selfid::ExperimentKind::kSigmaSweep:
        spec.sweep_values = {0.005, 0.02, 0.1};
        break;
      case selfid::ExperimentKind::kTransfer:
        spec.sweep_values = {25};
        break;
      default:
        break;
    }
  }

  selfid::ExperimentReport report = selfid::RunExperiment(spec);
  std::cout << "sweep_value,preset,runs,completed,mean_error,mean_adapting\n";
  for (const selfid::AggregateRow& a : report.aggregates) {
    fmt::print("{},{},{},{},{:.4f},{:.2f}\n", a.sweep_value, a.preset, a.runs,
               a.completed, a.mean_error, a.mean_adapting);
  }
  bool partial = report.failures > 0;
  for (const selfid::RunRow& r : report.rows) partial |= !r.summary.completed;
  if (partial) {
    std::cerr << report.failures << " failed run(s); see " << o.output
              << "/report.csv\n";
  }
  return partial ? kExitPartial : kExitOk;
}

int RunPlotData(const Options& o) {
  std::ifstream in(o.report);
  if (!in) throw std::runtime_error("cannot read " + o.report);
  selfid::EmitPlotData(in, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Self-identification and MPC manipulation experiments"};
  app.set_config("--config", "", "TOML/INI file supplying any flag");
  app.require_subcommand(1);
  app.fallthrough();
  AddLoopFlags(app, o);
  app.add_option("--seed", o.seed_base, "task seed (run) or seed base (sweeps)");
  app.add_option("--jobs", o.jobs, "concurrent runs")->check(CLI::PositiveNumber);

  CLI::App* run = app.add_subcommand("run", "run one task");
  run->add_option("--trajectory", o.trajectory)
      ->check(CLI::IsMember(selfid::TrajectoryNames()));
  run->add_option("--preset", o.preset);
  run->add_option("--dataset", o.dataset_in, "start from a saved dataset");
  run->add_option("--rollout-dump", o.rollout_dump, "write every MPC rollout");

  auto add_sweep = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--values", o.values, "sweep values");
    sub->add_option("--trajectories", o.trajectories)
        ->check(CLI::IsMember(selfid::TrajectoryNames()));
    sub->add_option("--presets", o.presets);
    sub->add_option("--repetitions", o.repetitions)->check(CLI::PositiveNumber);
    return sub;
  };
  CLI::App* sweep_initial =
      add_sweep("sweep-initial", "sweep d + a, split as d = value / 2");
  CLI::App* sweep_sigma = add_sweep("sweep-sigma", "sweep the MPC sigma");
  CLI::App* transfer =
      add_sweep("transfer", "identify on the first preset, transfer to the rest");

  CLI::App* plotdata = app.add_subcommand("plotdata", "plot table from a report");
  plotdata->add_option("report", o.report, "report.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return RunSingle(o);
    if (sweep_initial->parsed()) {
      return RunSweep(o, selfid::ExperimentKind::kInitialActionsSweep);
    }
    if (sweep_sigma->parsed()) return RunSweep(o, selfid::ExperimentKind::kSigmaSweep);
    if (transfer->parsed()) return RunSweep(o, selfid::ExperimentKind::kTransfer);
    if (plotdata->parsed()) return RunPlotData(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
