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

// Seeded experiment sweeps over the manipulation loop and their report files.
//
// Output directory layout:
//   report.csv      one row per run
//   aggregate.csv   mean/min/max per (sweep value, preset)
//   logs/           per-step task log of every run
//   datasets/       source datasets of a transfer experiment

#ifndef SELFID_EXPERIMENT_H_
#define SELFID_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "selfid/manipulation_loop.h"
#include "selfid/plant_sim.h"

namespace selfid {

enum class ExperimentKind {
  kSingle,
  kInitialActionsSweep,  // sweep value = d + a, split as d = value / 2
  kSigmaSweep,           // sweep value = MPC sigma
  kTransfer,             // sweep value = d + a on the source preset, same split
};

std::string_view KindName(ExperimentKind kind);
// throws std::invalid_argument
ExperimentKind ParseKind(std::string_view name);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSingle;
  std::vector<double> sweep_values;
  std::vector<std::string> trajectories;
  // for kTransfer the first preset is the source, the rest are targets
  std::vector<PlantPreset> presets;
  int repetitions = 5;
  uint64_t seed_base = 0;
  std::string output_path;
  LoopConfig base;
  double scale = 16.0;  // trajectory size, mm
  int jobs = 1;

  // throws std::invalid_argument
  void Validate() const;
};

struct RunRow {
  ExperimentKind kind = ExperimentKind::kSingle;
  double sweep_value = 0.0;
  std::string trajectory;
  std::string preset;
  int repetition = 0;
  uint64_t seed = 0;
  bool transferred = false;
  TaskSummary summary;
  std::string status = "ok";
  std::string log_file;  // relative to the output directory
};

struct AggregateRow {
  double sweep_value = 0.0;
  std::string preset;
  int runs = 0;
  int completed = 0;
  double mean_error = 0.0;
  double min_error = 0.0;
  double max_error = 0.0;
  double mean_adapting = 0.0;
  int min_adapting = 0;
  int max_adapting = 0;
  double mean_total_exploratory = 0.0;
};

struct ExperimentReport {
  std::vector<RunRow> rows;
  std::vector<AggregateRow> aggregates;
  int failures = 0;
};

// seed_base XOR FNV-1a-64 of "<value>|<trajectory>|<preset>|<repetition>",
// with the value in shortest round-trip form.
uint64_t RunSeed(uint64_t seed_base, double sweep_value,
                 std::string_view trajectory, std::string_view preset,
                 int repetition);

// Runs repetitions x |sweep_values| x |trajectories| x |presets| tasks and
// writes the report files. Individual run failures are recorded per row.
// Throws std::runtime_error when the output directory is not writable.
ExperimentReport RunExperiment(const ExperimentSpec& spec);

std::vector<AggregateRow> Aggregate(const std::vector<RunRow>& rows);

void WriteReport(std::ostream& out, const std::vector<RunRow>& rows);
// throws ParseError with the line number
std::vector<RunRow> ReadReport(std::istream& in);
void WriteAggregates(std::ostream& out, const std::vector<AggregateRow>& rows);

// Plot table per sweep value: value,mean_error,error_spread,mean_adapting
// where error_spread = max - min of the per-run mean errors.
void EmitPlotData(std::istream& report, std::ostream& out);

}  // namespace selfid

#endif  // SELFID_EXPERIMENT_H_
