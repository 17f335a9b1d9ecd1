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

#include "selfid/experiment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "selfid/text_io.h"
#include "selfid/trajectories.h"

namespace selfid {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kReportColumns =
    "kind,sweep_value,trajectory,preset,repetition,seed,transferred,"
    "completed,mean_error,max_error,adapting_actions,initial_actions,"
    "total_exploratory,steps,status,log_file";

// One planned run.
struct Job {
  std::size_t row = 0;
  double value = 0.0;
  std::string trajectory;
  const PlantPreset* preset = nullptr;
  int repetition = 0;
  bool transferred = false;
  std::string dataset_path;  // transfer source dataset (written or read)
};

void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  std::size_t workers = std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

LoopConfig ConfigFor(const ExperimentSpec& spec, const Job& job) {
  LoopConfig config = spec.base;
  config.exploration.control_dim = job.preset->control_dim();
  switch (spec.kind) {
    case ExperimentKind::kInitialActionsSweep:
    case ExperimentKind::kTransfer: {
      // even split, the odd action goes to density-guided selection
      int total = static_cast<int>(std::lround(job.value));
      int random = total / 2;
      config.exploration.random_actions = random;
      config.exploration.extra_actions = total - random;
      break;
    }
    case ExperimentKind::kSigmaSweep:
      config.mpc.sigma = job.value;
      break;
    case ExperimentKind::kSingle:
      break;
  }
  return config;
}

std::string LogName(const Job& job) {
  return fmt::format("logs/{}_{}_{}_r{}.csv", FormatDouble(job.value),
                     job.trajectory, job.preset->name, job.repetition);
}

void RunJob(const ExperimentSpec& spec, const Job& job, RunRow& row) {
  row.kind = spec.kind;
  row.sweep_value = job.value;
  row.trajectory = job.trajectory;
  row.preset = job.preset->name;
  row.repetition = job.repetition;
  row.transferred = job.transferred;
  row.seed = RunSeed(spec.seed_base, job.value, job.trajectory,
                     job.preset->name, job.repetition);
  row.log_file = LogName(job);

  LoopConfig config = ConfigFor(spec, job);
  config.seed = row.seed;
  SyntheticPlant plant(*job.preset, row.seed);
  ReferenceTrajectory reference =
      MakeTrajectory(job.trajectory, spec.scale, plant.Observe());

  TaskResult result;
  try {
    std::optional<Dataset> transferred;
    if (job.transferred) transferred = LoadDataset(job.dataset_path);
    result = RunTask(plant, reference, config, transferred);
    if (!result.completed) row.status = "incomplete";
  } catch (const TaskError& e) {
    result = e.partial();
    row.status = fmt::format("failed: {}", e.what());
  } catch (const std::exception& e) {
    row.status = fmt::format("failed: {}", e.what());
  }
  row.summary = TraceMetrics(result);

  std::ofstream log(fs::path(spec.output_path) / row.log_file);
  WriteTaskLog(log, result);
  if (!job.dataset_path.empty() && !job.transferred && result.initial_dataset) {
    SaveDataset(job.dataset_path, *result.initial_dataset);
  }
}

std::string Sanitize(std::string s) {
  // commas and newlines would break the delimiter-separated report
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

std::string_view KindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSingle: return "single";
    case ExperimentKind::kInitialActionsSweep: return "initial_actions_sweep";
    case ExperimentKind::kSigmaSweep: return "sigma_sweep";
    case ExperimentKind::kTransfer: return "transfer";
  }
  return "single";
}

ExperimentKind ParseKind(std::string_view name) {
  for (ExperimentKind k :
       {ExperimentKind::kSingle, ExperimentKind::kInitialActionsSweep,
        ExperimentKind::kSigmaSweep, ExperimentKind::kTransfer}) {
    if (KindName(k) == name) return k;
  }
  throw std::invalid_argument(fmt::format("unknown experiment kind '{}'", name));
}

void ExperimentSpec::Validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (kind != ExperimentKind::kSingle && sweep_values.empty()) {
    throw std::invalid_argument("sweep experiments need sweep values");
  }
  if (trajectories.empty()) throw std::invalid_argument("no trajectories given");
  if (presets.empty()) throw std::invalid_argument("no plant presets given");
  if (kind == ExperimentKind::kTransfer && presets.size() < 2) {
    throw std::invalid_argument("transfer needs a source and a target preset");
  }
  if (output_path.empty()) throw std::invalid_argument("no output path given");
  for (double v : sweep_values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite sweep value");
    if ((kind == ExperimentKind::kInitialActionsSweep ||
         kind == ExperimentKind::kTransfer) &&
        (v < 2 || v != std::round(v))) {
      throw std::invalid_argument(
          fmt::format("initial action counts must be integers >= 2, got {}", v));
    }
    if (kind == ExperimentKind::kSigmaSweep && v < 0) {
      throw std::invalid_argument("sigma values must be >= 0");
    }
  }
  for (const std::string& t : trajectories) MakeTrajectory(t, scale);
  for (const PlantPreset& p : presets) p.Validate();
}

uint64_t RunSeed(uint64_t seed_base, double sweep_value,
                 std::string_view trajectory, std::string_view preset,
                 int repetition) {
  std::string key = fmt::format("{}|{}|{}|{}", FormatDouble(sweep_value),
                                trajectory, preset, repetition);
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return seed_base ^ hash;
}

ExperimentReport RunExperiment(const ExperimentSpec& spec) {
  spec.Validate();
  const fs::path out(spec.output_path);
  std::error_code ec;
  fs::create_directories(out / "logs", ec);
  if (ec) {
    throw std::runtime_error(fmt::format("cannot create output directory {}: {}",
                                         out.string(), ec.message()));
  }
  if (spec.kind == ExperimentKind::kTransfer) {
    fs::create_directories(out / "datasets", ec);
    if (ec) throw std::runtime_error("cannot create " + (out / "datasets").string());
  }
  std::ofstream report_file(out / "report.csv");
  if (!report_file) {
    throw std::runtime_error("cannot write " + (out / "report.csv").string());
  }

  std::vector<double> values = spec.sweep_values;
  if (values.empty()) {
    values.push_back(spec.base.exploration.initial_actions());
  }

  // first phase: everything except transfer targets
  std::vector<Job> first;
  std::vector<Job> second;
  for (double value : values) {
    for (const std::string& trajectory : spec.trajectories) {
      for (std::size_t p = 0; p < spec.presets.size(); ++p) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
          Job job;
          job.value = value;
          job.trajectory = trajectory;
          job.preset = &spec.presets[p];
          job.repetition = rep;
          if (spec.kind == ExperimentKind::kTransfer) {
            job.dataset_path =
                (out / fmt::format("datasets/source_{}_{}_r{}.csv",
                                   FormatDouble(value), trajectory, rep))
                    .string();
            job.transferred = p > 0;
          }
          job.row = first.size() + second.size();
          (job.transferred ? second : first).push_back(std::move(job));
        }
      }
    }
  }

  ExperimentReport report;
  report.rows.resize(first.size() + second.size());
  ParallelFor(first.size(), spec.jobs,
              [&](std::size_t i) { RunJob(spec, first[i], report.rows[first[i].row]); });
  // a target whose source failed before identification has no dataset; its
  // load error is recorded on the row
  ParallelFor(second.size(), spec.jobs,
              [&](std::size_t i) { RunJob(spec, second[i], report.rows[second[i].row]); });

  for (const RunRow& row : report.rows) {
    if (row.status.starts_with("failed")) ++report.failures;
  }
  report.aggregates = Aggregate(report.rows);

  WriteReport(report_file, report.rows);
  std::ofstream aggregate_file(out / "aggregate.csv");
  WriteAggregates(aggregate_file, report.aggregates);
  if (!report_file || !aggregate_file) {
    throw std::runtime_error("error writing report files in " + out.string());
  }
  return report;
}

std::vector<AggregateRow> Aggregate(const std::vector<RunRow>& rows) {
  std::map<std::pair<double, std::string>, std::vector<const RunRow*>> groups;
  // keep first-seen preset order within a sweep value
  std::map<std::string, std::size_t> preset_order;
  for (const RunRow& row : rows) {
    preset_order.emplace(row.preset, preset_order.size());
    groups[{row.sweep_value, row.preset}].push_back(&row);
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow agg;
    agg.sweep_value = key.first;
    agg.preset = key.second;
    agg.runs = static_cast<int>(members.size());
    agg.min_error = members.front()->summary.mean_error;
    agg.max_error = agg.min_error;
    agg.min_adapting = members.front()->summary.adapting_actions;
    agg.max_adapting = agg.min_adapting;
    for (const RunRow* r : members) {
      const TaskSummary& s = r->summary;
      if (s.completed) ++agg.completed;
      agg.mean_error += s.mean_error;
      agg.min_error = std::min(agg.min_error, s.mean_error);
      agg.max_error = std::max(agg.max_error, s.mean_error);
      agg.mean_adapting += s.adapting_actions;
      agg.min_adapting = std::min(agg.min_adapting, s.adapting_actions);
      agg.max_adapting = std::max(agg.max_adapting, s.adapting_actions);
      agg.mean_total_exploratory += s.total_exploratory_actions;
    }
    agg.mean_error /= agg.runs;
    agg.mean_adapting /= agg.runs;
    agg.mean_total_exploratory /= agg.runs;
    out.push_back(std::move(agg));
  }
  std::stable_sort(out.begin(), out.end(), [&](const AggregateRow& a, const AggregateRow& b) {
    return std::tie(a.sweep_value, preset_order[a.preset]) <
           std::tie(b.sweep_value, preset_order[b.preset]);
  });
  return out;
}

void WriteReport(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "# schema=1 report\n" << kReportColumns << '\n';
  for (const RunRow& r : rows) {
    const TaskSummary& s = r.summary;
    out << KindName(r.kind) << ',' << FormatDouble(r.sweep_value) << ','
        << r.trajectory << ',' << r.preset << ',' << r.repetition << ','
        << r.seed << ',' << (r.transferred ? 1 : 0) << ','
        << (s.completed ? 1 : 0) << ',' << FormatDouble(s.mean_error) << ','
        << FormatDouble(s.max_error) << ',' << s.adapting_actions << ','
        << s.initial_actions << ',' << s.total_exploratory_actions << ','
        << s.steps << ',' << Sanitize(r.status) << ',' << r.log_file << '\n';
  }
}

std::vector<RunRow> ReadReport(std::istream& in) {
  std::vector<RunRow> rows;
  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kReportColumns) throw ParseError(line_no, "unexpected report header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f = SplitFields(line, ',');
    if (f.size() != 16) {
      throw ParseError(line_no, fmt::format("expected 16 fields, got {}", f.size()));
    }
    RunRow r;
    try {
      r.kind = ParseKind(f[0]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    r.sweep_value = ParseDouble(f[1], line_no);
    r.trajectory = f[2];
    r.preset = f[3];
    r.repetition = static_cast<int>(ParseInt(f[4], line_no));
    r.seed = std::stoull(f[5]);
    r.transferred = ParseInt(f[6], line_no) != 0;
    r.summary.completed = ParseInt(f[7], line_no) != 0;
    r.summary.mean_error = ParseDouble(f[8], line_no);
    r.summary.max_error = ParseDouble(f[9], line_no);
    r.summary.adapting_actions = static_cast<int>(ParseInt(f[10], line_no));
    r.summary.initial_actions = static_cast<int>(ParseInt(f[11], line_no));
    r.summary.total_exploratory_actions = static_cast<int>(ParseInt(f[12], line_no));
    r.summary.steps = static_cast<int>(ParseInt(f[13], line_no));
    r.status = f[14];
    r.log_file = f[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

void WriteAggregates(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "# schema=1 aggregate\n"
      << "sweep_value,preset,runs,completed,mean_error,min_error,max_error,"
         "mean_adapting,min_adapting,max_adapting,mean_total_exploratory\n";
  for (const AggregateRow& a : rows) {
    out << FormatDouble(a.sweep_value) << ',' << a.preset << ',' << a.runs
        << ',' << a.completed << ',' << FormatDouble(a.mean_error) << ','
        << FormatDouble(a.min_error) << ',' << FormatDouble(a.max_error) << ','
        << FormatDouble(a.mean_adapting) << ',' << a.min_adapting << ','
        << a.max_adapting << ',' << FormatDouble(a.mean_total_exploratory)
        << '\n';
  }
}

void EmitPlotData(std::istream& report, std::ostream& out) {
  std::vector<RunRow> rows = ReadReport(report);
  std::map<double, std::vector<const RunRow*>> by_value;
  for (const RunRow& r : rows) by_value[r.sweep_value].push_back(&r);

  out << "# schema=1 plotdata\n"
      << "value,mean_error,error_spread,mean_adapting\n";
  for (const auto& [value, members] : by_value) {
    double sum = 0.0;
    double adapting = 0.0;
    double lo = members.front()->summary.mean_error;
    double hi = lo;
    for (const RunRow* r : members) {
      sum += r->summary.mean_error;
      adapting += r->summary.adapting_actions;
      lo = std::min(lo, r->summary.mean_error);
      hi = std::max(hi, r->summary.mean_error);
    }
    double n = static_cast<double>(members.size());
    out << FormatDouble(value) << ',' << FormatDouble(sum / n) << ','
        << FormatDouble(hi - lo) << ',' << FormatDouble(adapting / n) << '\n';
  }
}

}  // namespace selfid
