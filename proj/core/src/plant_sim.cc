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

#include "selfid/plant_sim.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "selfid/text_io.h"

namespace selfid {
namespace {

// smoothing of |u| in the drift map
constexpr double kDriftSmoothing = 0.01;

PlantPreset MakePreset(std::string name, double b00, double b01, double b10,
                       double b11, double gain, double drift) {
  PlantPreset p;
  p.name = std::move(name);
  p.base_jacobian.resize(3, 2);
  p.base_jacobian << b00, b01, b10, b11, 0.0, 0.0;
  p.nonlinearity_gain = gain;
  p.drift_rate = drift;
  p.noise_std = 0.05;
  return p;
}

bool ParseBool(std::string_view text, int line) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(line, fmt::format("not a boolean: '{}'", text));
}

std::vector<double> ParseNumbers(std::string_view text, int line) {
  std::vector<double> values;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) values.push_back(ParseDouble(token, line));
  return values;
}

}  // namespace

void PlantPreset::Validate() const {
  if (base_jacobian.rows() != 3 || base_jacobian.cols() < 1) {
    throw std::invalid_argument(
        fmt::format("preset {}: jacobian must be 3 x C", name));
  }
  if (!base_jacobian.allFinite()) {
    throw std::invalid_argument(
        fmt::format("preset {}: non-finite jacobian", name));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(nonlinearity_gain) ||
      !std::isfinite(drift_rate) || !std::isfinite(modulation)) {
    throw std::invalid_argument(
        fmt::format("preset {}: invalid scalar parameter", name));
  }
  if (modulation < 0.0 || modulation >= 1.0) {
    throw std::invalid_argument(
        fmt::format("preset {}: modulation must be in [0, 1)", name));
  }
  if (hidden_dim < 1) {
    throw std::invalid_argument(
        fmt::format("preset {}: hidden_dim must be >= 1", name));
  }
  if (!origin.allFinite()) {
    throw std::invalid_argument(fmt::format("preset {}: non-finite origin", name));
  }
}

std::vector<std::string> BuiltinPresetNames() {
  return {"preset-1", "preset-2", "preset-3", "preset-4", "preset-5"};
}

PlantPreset BuiltinPreset(std::string_view name) {
  // Stand-ins for five grasped objects. Responses are scaled so that one
  // exploratory action moves the object by about a millimetre. preset-4 is
  // nearly linear; presets 1-3 stay close to it, preset-5 drifts fastest.
  if (name == "preset-1") return MakePreset("preset-1", 0.90, 0.27, -0.21, 0.87, 0.12, 0.005);
  if (name == "preset-2") return MakePreset("preset-2", 1.02, 0.18, -0.12, 0.96, 0.12, 0.008);
  if (name == "preset-3") return MakePreset("preset-3", 0.90, 0.30, -0.24, 0.84, 0.15, 0.006);
  if (name == "preset-4") return MakePreset("preset-4", 0.96, 0.24, -0.18, 0.90, 0.09, 0.005);
  if (name == "preset-5") return MakePreset("preset-5", 1.20, 0.12, -0.30, 0.72, 0.18, 0.08);
  throw std::invalid_argument(fmt::format("unknown plant preset '{}'", name));
}

std::vector<PlantPreset> ReadPresets(std::istream& in) {
  std::vector<PlantPreset> presets;
  std::optional<PlantPreset> current;
  int line_no = 0;
  int section_line = 0;
  auto finish = [&]() {
    if (!current) return;
    try {
      current->Validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(section_line, e.what());
    }
    presets.push_back(std::move(*current));
    current.reset();
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section");
      finish();
      current = BuiltinPreset("preset-4");
      current->name = std::string(Trim(line.substr(1, line.size() - 2)));
      if (current->name.empty()) throw ParseError(line_no, "empty preset name");
      section_line = line_no;
      continue;
    }
    if (!current) throw ParseError(line_no, "key outside of a [preset] section");
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    std::string key(Trim(line.substr(0, eq)));
    std::string_view value = Trim(line.substr(eq + 1));

    if (key == "base") {
      std::string name = current->name;
      try {
        *current = BuiltinPreset(value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, e.what());
      }
      current->name = name;
    } else if (key == "jacobian") {
      std::vector<std::string> rows = SplitFields(value, ';');
      if (rows.size() != 3) throw ParseError(line_no, "jacobian needs 3 rows");
      std::vector<std::vector<double>> parsed;
      for (const std::string& row : rows) parsed.push_back(ParseNumbers(row, line_no));
      std::size_t cols = parsed[0].size();
      if (cols == 0) throw ParseError(line_no, "jacobian needs at least one column");
      Eigen::MatrixXd b(3, cols);
      for (int r = 0; r < 3; ++r) {
        if (parsed[r].size() != cols) throw ParseError(line_no, "ragged jacobian rows");
        for (std::size_t c = 0; c < cols; ++c) b(r, c) = parsed[r][c];
      }
      current->base_jacobian = b;
    } else if (key == "nonlinearity_gain") {
      current->nonlinearity_gain = ParseDouble(value, line_no);
    } else if (key == "drift_rate") {
      current->drift_rate = ParseDouble(value, line_no);
    } else if (key == "noise_std") {
      current->noise_std = ParseDouble(value, line_no);
    } else if (key == "modulation") {
      current->modulation = ParseDouble(value, line_no);
    } else if (key == "planar") {
      current->planar = ParseBool(value, line_no);
    } else if (key == "hidden_dim") {
      current->hidden_dim = static_cast<int>(ParseInt(value, line_no));
    } else if (key == "origin") {
      std::vector<double> o = ParseNumbers(value, line_no);
      if (o.size() != 3) throw ParseError(line_no, "origin needs 3 numbers");
      current->origin = Vec3(o[0], o[1], o[2]);
    } else {
      throw ParseError(line_no, fmt::format("unknown preset key '{}'", key));
    }
  }
  finish();
  return presets;
}

std::vector<PlantPreset> LoadPresets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open preset file " + path);
  return ReadPresets(in);
}

Eigen::VectorXd ProjectionVector(int row, int col, int control_dim,
                                 int hidden_dim) {
  Eigen::VectorXd a(hidden_dim);
  double phase = 1.7 * (row * control_dim + col + 1);
  for (int n = 0; n < hidden_dim; ++n) a[n] = std::sin(phase + 2.3 * n);
  double norm = a.norm();
  if (norm > 0.0) a /= norm;
  return a;
}

Eigen::VectorXd DriftDirection(int hidden_dim) {
  Eigen::VectorXd v(hidden_dim);
  for (int n = 0; n < hidden_dim; ++n) v[n] = std::cos(0.9 * n + 0.3);
  return v / v.norm();
}

Vec3 QuadraticResponse(const Control& u) {
  const Eigen::Index c = u.size();
  double square = u.squaredNorm();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < c; ++i) cross += u[i] * u[(i + 1) % c];
  return Vec3(square, cross, 0.0);
}

SyntheticPlant::SyntheticPlant(PlantPreset preset, uint64_t seed)
    : preset_(std::move(preset)) {
  preset_.Validate();
  const int c = preset_.control_dim();
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < c; ++col) {
      projections_.push_back(ProjectionVector(r, col, c, preset_.hidden_dim));
    }
  }
  drift_direction_ = DriftDirection(preset_.hidden_dim);
  Reset(seed);
}

void SyntheticPlant::Reset(uint64_t seed) {
  rng_.seed(MixSeed(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  state_.hidden.resize(preset_.hidden_dim);
  for (int n = 0; n < preset_.hidden_dim; ++n) {
    state_.hidden[n] = 0.1 * normal(rng_);
  }
  state_.pom = preset_.origin;
  state_.step_count = 0;
  observed_ = state_.pom;
}

Eigen::MatrixXd SyntheticPlant::DebugJacobian() const {
  const int c = preset_.control_dim();
  Eigen::MatrixXd j = preset_.base_jacobian;
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < c; ++col) {
      double s = projections_[r * c + col].dot(state_.hidden);
      j(r, col) *= 1.0 + preset_.modulation * std::tanh(s);
    }
  }
  return j;
}

Vec3 SyntheticPlant::NoiseSample(double stddev) {
  Vec3 n = Vec3::Zero();
  if (stddev <= 0.0) return n;
  std::normal_distribution<double> normal(0.0, stddev);
  n.x() = normal(rng_);
  n.y() = normal(rng_);
  if (!preset_.planar) n.z() = normal(rng_);
  return n;
}

Vec3 SyntheticPlant::Execute(const Control& control) {
  if (control.size() != preset_.control_dim()) {
    throw std::invalid_argument(fmt::format(
        "plant {}: control of dimension {}, expected {}", preset_.name,
        control.size(), preset_.control_dim()));
  }
  if (!control.allFinite()) {
    throw std::invalid_argument("plant: non-finite control");
  }
  Vec3 motion = DebugJacobian() * control +
                preset_.nonlinearity_gain * QuadraticResponse(control) +
                NoiseSample(preset_.noise_std);
  if (preset_.planar) motion.z() = 0.0;

  // sqrt(|u|^2 + eps^2) - eps, written to be exactly zero at u = 0
  double sq = control.squaredNorm();
  double activity =
      sq / (std::sqrt(sq + kDriftSmoothing * kDriftSmoothing) + kDriftSmoothing);
  state_.hidden += preset_.drift_rate * activity * drift_direction_;
  state_.pom += motion;
  if (preset_.planar) state_.pom.z() = preset_.origin.z();
  ++state_.step_count;

  observed_ = state_.pom + NoiseSample(preset_.noise_std);
  return observed_;
}

}  // namespace selfid
