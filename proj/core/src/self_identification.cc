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

#include "selfid/self_identification.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "selfid/text_io.h"

namespace selfid {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// squared distance from motion i to its nearest other motion, and its index
std::pair<double, std::size_t> NearestMotion(const Dataset& dataset,
                                             std::size_t i) {
  double best = kInfinity;
  std::size_t best_j = i;
  for (std::size_t j = 0; j < dataset.size(); ++j) {
    if (j == i) continue;
    double d = (dataset[i].motion - dataset[j].motion).squaredNorm();
    if (d < best) {
      best = d;
      best_j = j;
    }
  }
  return {best, best_j};
}

}  // namespace

// ---------- Dataset ----------

Dataset::Dataset(int control_dim, std::optional<std::size_t> capacity)
    : control_dim_(control_dim), capacity_(capacity) {
  if (control_dim <= 0) {
    throw std::invalid_argument(
        fmt::format("dataset: control_dim must be positive, got {}",
                    control_dim));
  }
  if (capacity && *capacity == 0) {
    throw std::invalid_argument("dataset: capacity must be positive");
  }
}

void Dataset::Add(const Control& control, const Vec3& motion) {
  if (control.size() != control_dim_) {
    throw std::invalid_argument(
        fmt::format("dataset: control of dimension {} in a C={} dataset",
                    control.size(), control_dim_));
  }
  if (!control.allFinite() || !motion.allFinite()) {
    throw std::invalid_argument("dataset: non-finite sample");
  }
  samples_.push_back({control, motion});
  if (capacity_ && samples_.size() > *capacity_) samples_.pop_front();
}

Eigen::MatrixXd Dataset::Controls() const {
  Eigen::MatrixXd m(samples_.size(), control_dim_);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    m.row(i) = samples_[i].control.transpose();
  }
  return m;
}

Eigen::MatrixXd Dataset::Motions() const {
  Eigen::MatrixXd m(samples_.size(), 3);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    m.row(i) = samples_[i].motion.transpose();
  }
  return m;
}

bool Dataset::operator==(const Dataset& other) const {
  if (control_dim_ != other.control_dim_ || size() != other.size()) {
    return false;
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (samples_[i].control != other.samples_[i].control ||
        samples_[i].motion != other.samples_[i].motion) {
      return false;
    }
  }
  return true;
}

void WriteDataset(std::ostream& out, const Dataset& dataset) {
  out << "# schema=1 dataset\n";
  out << "control_dim=" << dataset.control_dim()
      << ",count=" << dataset.size() << '\n';
  for (const Sample& s : dataset) {
    for (Eigen::Index c = 0; c < s.control.size(); ++c) {
      out << FormatDouble(s.control[c]) << ',';
    }
    out << FormatDouble(s.motion.x()) << ',' << FormatDouble(s.motion.y())
        << ',' << FormatDouble(s.motion.z()) << '\n';
  }
}

Dataset ReadDataset(std::istream& in) {
  std::string line;
  int line_no = 0;
  int control_dim = -1;
  long long count = -1;
  std::optional<Dataset> dataset;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = Trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (line_no == 1 && text.find("schema=1") == std::string_view::npos) {
        throw ParseError(line_no, "unsupported dataset schema");
      }
      continue;
    }
    if (!dataset) {
      for (const std::string& field : SplitFields(text, ',')) {
        auto eq = field.find('=');
        if (eq == std::string::npos) {
          throw ParseError(line_no, "expected key=value header");
        }
        std::string key(Trim(std::string_view(field).substr(0, eq)));
        std::string_view value = std::string_view(field).substr(eq + 1);
        if (key == "control_dim") {
          control_dim = static_cast<int>(ParseInt(value, line_no));
        } else if (key == "count") {
          count = ParseInt(value, line_no);
        } else {
          throw ParseError(line_no, fmt::format("unknown header key '{}'", key));
        }
      }
      if (control_dim <= 0 || count < 0) {
        throw ParseError(line_no, "header needs control_dim and count");
      }
      dataset.emplace(control_dim);
      continue;
    }
    std::vector<std::string> fields = SplitFields(text, ',');
    if (static_cast<int>(fields.size()) != control_dim + 3) {
      throw ParseError(line_no,
                       fmt::format("expected {} fields, got {}",
                                   control_dim + 3, fields.size()));
    }
    Control u(control_dim);
    for (int c = 0; c < control_dim; ++c) u[c] = ParseDouble(fields[c], line_no);
    Vec3 dz(ParseDouble(fields[control_dim], line_no),
            ParseDouble(fields[control_dim + 1], line_no),
            ParseDouble(fields[control_dim + 2], line_no));
    try {
      dataset->Add(u, dz);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!dataset) throw ParseError(line_no, "missing dataset header");
  if (static_cast<long long>(dataset->size()) != count) {
    throw ParseError(line_no, fmt::format("header announces {} records, found {}",
                                          count, dataset->size()));
  }
  return std::move(*dataset);
}

void SaveDataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file " + path);
  WriteDataset(out, dataset);
  if (!out) throw std::runtime_error("error writing dataset file " + path);
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path);
  return ReadDataset(in);
}

// ---------- configuration and models ----------

void ExplorationConfig::Validate() const {
  if (random_actions < 0 || extra_actions < 0 || adapting_actions < 0) {
    throw std::invalid_argument("exploration: action counts must be >= 0");
  }
  if (!(exploration_range >= 0.0) || !std::isfinite(exploration_range)) {
    throw std::invalid_argument("exploration: range must be >= 0");
  }
  if (control_dim <= 0) {
    throw std::invalid_argument("exploration: control_dim must be positive");
  }
  if (forward_length_scale < 0.0 || inverse_length_scale < 0.0 ||
      noise_jitter < 0.0) {
    throw std::invalid_argument(
        "exploration: length scales and jitter must be >= 0");
  }
}

ManipulationModels ManipulationModels::Fit(const Dataset& dataset,
                                           const ExplorationConfig& config) {
  if (dataset.empty()) {
    throw std::invalid_argument("cannot fit models on an empty dataset");
  }
  Eigen::MatrixXd controls = dataset.Controls();
  Eigen::MatrixXd motions = dataset.Motions();

  KernelParams forward_params{config.forward_length_scale, config.noise_jitter};
  if (forward_params.length_scale == 0.0) {
    forward_params.length_scale =
        config.exploration_range > 0.0 ? 0.5 * config.exploration_range : 1.0;
  }
  KernelParams inverse_params{config.inverse_length_scale, config.noise_jitter};
  if (inverse_params.length_scale == 0.0) {
    double extent = motions.rowwise().norm().maxCoeff();
    inverse_params.length_scale = extent > 0.0 ? 0.5 * extent : 1.0;
  }

  GpModel forward = GpModel::Fit(controls, motions, forward_params);
  GpModel inverse = GpModel::Fit(motions, controls, inverse_params);
  return ManipulationModels(std::move(forward), std::move(inverse),
                            dataset.size());
}

Vec3 ManipulationModels::Forward(const Control& control) const {
  return forward_.PredictMean(control);
}

Control ManipulationModels::Inverse(const Vec3& motion) const {
  return inverse_.PredictMean(motion);
}

// ---------- exploratory action selection ----------

Control RandomControl(const ExplorationConfig& config, std::mt19937_64& rng) {
  Control u = Control::Zero(config.control_dim);
  if (config.exploration_range <= 0.0) return u;
  std::uniform_real_distribution<double> uniform(-config.exploration_range,
                                                 config.exploration_range);
  for (int c = 0; c < config.control_dim; ++c) u[c] = uniform(rng);
  return u;
}

double LocalDensity(const Dataset& dataset, std::size_t i) {
  if (dataset.size() < 2) {
    throw std::invalid_argument("local density needs at least two samples");
  }
  if (i >= dataset.size()) {
    throw std::invalid_argument(
        fmt::format("local density: index {} out of range", i));
  }
  double d2 = NearestMotion(dataset, i).first;
  if (d2 == 0.0) return kInfinity;
  return 1.0 / std::sqrt(d2);
}

std::optional<PairSelection> SelectPair(const Dataset& dataset) {
  if (dataset.size() < 2) {
    throw std::invalid_argument("pair selection needs at least two samples");
  }
  // lowest density == largest nearest-neighbor distance; strict comparison
  // keeps the lowest index on ties
  std::optional<PairSelection> best;
  double best_distance = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto [d2, j] = NearestMotion(dataset, i);
    if (d2 == 0.0) continue;
    if (!best || d2 > best_distance) {
      best_distance = d2;
      best = PairSelection{i, j, Control()};
    }
  }
  if (best) {
    best->control = 0.5 * (dataset[best->lowest_density].control +
                           dataset[best->nearest_neighbor].control);
  }
  return best;
}

Control SelectExploratoryControl(const Dataset& dataset,
                                 const ExplorationConfig& config,
                                 std::mt19937_64& rng) {
  std::optional<PairSelection> pick = SelectPair(dataset);
  if (pick) return pick->control;
  return RandomControl(config, rng);
}

Identification SelfIdentify(Plant& plant, const ExplorationConfig& config,
                            Dataset& dataset, IdentifyMode mode,
                            std::mt19937_64& rng) {
  config.Validate();
  if (plant.control_dim() != dataset.control_dim() ||
      config.control_dim != dataset.control_dim()) {
    throw std::invalid_argument("self-identify: control dimension mismatch");
  }
  int random_count = 0;
  int selected_count = 0;
  if (mode == IdentifyMode::kInitial) {
    random_count = config.random_actions;
    selected_count = config.extra_actions;
  } else {
    if (dataset.size() < 2) {
      throw std::invalid_argument(
          "adapting actions need a dataset with at least two samples");
    }
    selected_count = config.adapting_actions;
  }

  std::vector<ExploratoryAction> actions;
  actions.reserve(random_count + selected_count);
  Vec3 position = plant.Observe();
  auto execute = [&](const Control& u, bool random) {
    Vec3 next = plant.Execute(u);
    Vec3 motion = next - position;
    position = next;
    dataset.Add(u, motion);
    actions.push_back({u, motion, next, random});
  };

  for (int i = 0; i < random_count; ++i) execute(RandomControl(config, rng), true);
  for (int i = 0; i < selected_count; ++i) {
    // a dataset too small for density selection falls back to sampling
    if (dataset.size() < 2) {
      execute(RandomControl(config, rng), true);
      continue;
    }
    std::optional<PairSelection> pick = SelectPair(dataset);
    if (pick) {
      execute(pick->control, false);
    } else {
      execute(RandomControl(config, rng), true);
    }
  }

  return {ManipulationModels::Fit(dataset, config), std::move(actions)};
}

Transfer TransferModels(const Dataset& saved, const ExplorationConfig& config) {
  if (saved.empty()) {
    throw std::invalid_argument("model transfer needs a non-empty dataset");
  }
  if (saved.control_dim() != config.control_dim) {
    throw std::invalid_argument(
        fmt::format("model transfer: dataset has C={}, configuration C={}",
                    saved.control_dim(), config.control_dim));
  }
  Dataset dataset(config.control_dim, config.capacity);
  for (const Sample& s : saved) dataset.Add(s.control, s.motion);
  return {ManipulationModels::Fit(saved, config), std::move(dataset)};
}

}  // namespace selfid
