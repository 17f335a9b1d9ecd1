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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "selfid/plant_sim.h"
#include "selfid/text_io.h"

namespace selfid {
namespace {

Control C2(double a, double b) {
  Control u(2);
  u << a, b;
  return u;
}

Dataset Motions1d(std::initializer_list<double> xs) {
  Dataset d(2);
  for (double x : xs) d.Add(C2(x, 0), Vec3(x, 0, 0));
  return d;
}

Dataset RandomDataset(std::mt19937_64& rng, int n, bool duplicates) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d(2);
  for (int i = 0; i < n; ++i) {
    if (duplicates && i > 0 && u(rng) > 0.6) {
      const Sample& s = d[static_cast<std::size_t>((u(rng) + 1.0) / 2.0 * i) % i];
      d.Add(C2(u(rng), u(rng)), s.motion);
      continue;
    }
    d.Add(C2(u(rng), u(rng)), Vec3(u(rng), u(rng), 0.0));
  }
  return d;
}

ExplorationConfig LinearConfig(int d, int a) {
  ExplorationConfig c;
  c.random_actions = d;
  c.extra_actions = a;
  c.control_dim = 2;
  return c;
}

TEST(DatasetTest, AddAndCapacity) {
  Dataset d(2, 3);
  for (int i = 0; i < 5; ++i) d.Add(C2(i, 0), Vec3(i, 0, 0));
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].control[0], 2.0);
  EXPECT_EQ(d[2].control[0], 4.0);
  EXPECT_EQ(d.Controls().rows(), 3);
  EXPECT_EQ(d.Motions()(1, 0), 3.0);
}

TEST(DatasetTest, RejectsBadInput) {
  EXPECT_THROW(Dataset(0), std::invalid_argument);
  EXPECT_THROW(Dataset(2, 0), std::invalid_argument);
  Dataset d(2);
  EXPECT_THROW(d.Add(Control::Zero(3), Vec3::Zero()), std::invalid_argument);
  EXPECT_THROW(d.Add(C2(NAN, 0), Vec3::Zero()), std::invalid_argument);
  EXPECT_THROW(d.Add(C2(0, 0), Vec3(INFINITY, 0, 0)), std::invalid_argument);
}

TEST(DatasetTest, TextRoundTripIsBitExact) {
  std::mt19937_64 rng(4);
  Dataset d = RandomDataset(rng, 12, false);
  d.Add(C2(0.1, 1.0 / 3.0), Vec3(1e-300, -2.5e17, 0.0));
  std::stringstream s;
  WriteDataset(s, d);
  Dataset back = ReadDataset(s);
  EXPECT_TRUE(back == d);
}

TEST(DatasetTest, ReadReportsLineNumbers) {
  std::istringstream bad_count("# schema=1 dataset\ncontrol_dim=2,count=2\n1,2,3,4,5\n");
  EXPECT_THROW(ReadDataset(bad_count), ParseError);
  std::istringstream bad_fields("# schema=1 dataset\ncontrol_dim=2,count=1\n1,2,3\n");
  try {
    ReadDataset(bad_fields);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  std::istringstream bad_schema("# schema=2 dataset\ncontrol_dim=2,count=0\n");
  EXPECT_THROW(ReadDataset(bad_schema), ParseError);
  std::istringstream no_header("");
  EXPECT_THROW(ReadDataset(no_header), ParseError);
}

TEST(LocalDensityTest, Examples) {
  Dataset two(2);
  two.Add(C2(0, 0), Vec3(0, 0, 0));
  two.Add(C2(1, 0), Vec3(2, 0, 0));
  EXPECT_DOUBLE_EQ(LocalDensity(two, 0), 0.5);
  EXPECT_DOUBLE_EQ(LocalDensity(two, 1), 0.5);

  Dataset three = Motions1d({0, 1, 5});
  EXPECT_DOUBLE_EQ(LocalDensity(three, 2), 0.25);

  Dataset dup = Motions1d({1, 1, 3});
  EXPECT_TRUE(std::isinf(LocalDensity(dup, 0)));
  EXPECT_DOUBLE_EQ(LocalDensity(dup, 2), 0.5);
}

TEST(LocalDensityTest, Errors) {
  Dataset one = Motions1d({0});
  EXPECT_THROW(LocalDensity(one, 0), std::invalid_argument);
  Dataset two = Motions1d({0, 1});
  EXPECT_THROW(LocalDensity(two, 2), std::invalid_argument);
  EXPECT_THROW(SelectPair(one), std::invalid_argument);
}

TEST(SelectPairTest, HandWorkedExample) {
  Dataset d(2);
  d.Add(C2(0, 0), Vec3(0, 0, 0));
  d.Add(C2(1, 0), Vec3(1, 0, 0));
  d.Add(C2(4, 0), Vec3(9, 0, 0));
  auto pick = SelectPair(d);
  ASSERT_TRUE(pick);
  EXPECT_EQ(pick->lowest_density, 2u);
  EXPECT_EQ(pick->nearest_neighbor, 1u);
  EXPECT_EQ(pick->control, C2(2.5, 0));
}

TEST(SelectPairTest, SkipsDuplicatesAndFallsBack) {
  Dataset d(2);
  d.Add(C2(0.2, 0), Vec3(1, 1, 0));
  d.Add(C2(-0.2, 0), Vec3(1, 1, 0));
  EXPECT_FALSE(SelectPair(d));
  ExplorationConfig c = LinearConfig(2, 0);
  c.exploration_range = 0.3;
  std::mt19937_64 rng(1);
  Control u = SelectExploratoryControl(d, c, rng);
  EXPECT_LE(u.cwiseAbs().maxCoeff(), 0.3);
}

TEST(SelectPairTest, TiesGoToLowestIndex) {
  // symmetric layout: indices 0 and 2 have equal nearest-neighbor distance
  Dataset d = Motions1d({-2, 0, 2});
  auto pick = SelectPair(d);
  ASSERT_TRUE(pick);
  EXPECT_EQ(pick->lowest_density, 0u);
  EXPECT_EQ(pick->nearest_neighbor, 1u);
}

TEST(SelectPairTest, MatchesBruteForce) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(2, 50);
  for (int t = 0; t < 200; ++t) {
    Dataset d = RandomDataset(rng, size(rng), t % 3 == 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(LocalDensity(d, i), testing::BruteDensity(d, i));
    }
    auto got = SelectPair(d);
    auto want = testing::BruteSelect(d);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (!got) continue;
    EXPECT_EQ(got->lowest_density, want->p);
    EXPECT_EQ(got->nearest_neighbor, want->neighbor);
    EXPECT_EQ(got->control, want->control);
  }
}

TEST(SelectPairTest, MidpointStaysInIntervalHull) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 100; ++t) {
    Dataset d = RandomDataset(rng, 2 + t % 30, false);
    auto pick = SelectPair(d);
    ASSERT_TRUE(pick);
    Eigen::MatrixXd u = d.Controls();
    for (int c = 0; c < 2; ++c) {
      EXPECT_GE(pick->control[c], u.col(c).minCoeff());
      EXPECT_LE(pick->control[c], u.col(c).maxCoeff());
    }
  }
}

TEST(RandomControlTest, StaysInRange) {
  ExplorationConfig c = LinearConfig(1, 0);
  c.control_dim = 3;
  c.exploration_range = 0.4;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    Control u = RandomControl(c, rng);
    ASSERT_EQ(u.size(), 3);
    EXPECT_LE(u.cwiseAbs().maxCoeff(), 0.4);
  }
  c.exploration_range = 0.0;
  EXPECT_EQ(RandomControl(c, rng), Control::Zero(3));
}

TEST(SelfIdentifyTest, LinearPlantIsItsOwnOracle) {
  SyntheticPlant plant(testing::LinearPreset(testing::TestJacobian()), 1);
  Dataset d(2);
  std::mt19937_64 rng(3);
  Identification id =
      SelfIdentify(plant, LinearConfig(2, 0), d, IdentifyMode::kInitial, rng);
  ASSERT_EQ(d.size(), 2u);
  for (const Sample& s : d) {
    Vec3 expected = testing::TestJacobian() * s.control;
    EXPECT_LE((s.motion - expected).norm(), 1e-12);
  }
  EXPECT_EQ(id.actions.size(), 2u);
  EXPECT_TRUE(id.actions[0].random);
}

TEST(SelfIdentifyTest, FifteenActionsGiveFifteenSamples) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 2);
  Dataset d(2);
  std::mt19937_64 rng(4);
  Identification id =
      SelfIdentify(plant, LinearConfig(5, 10), d, IdentifyMode::kInitial, rng);
  EXPECT_EQ(d.size(), 15u);
  EXPECT_EQ(plant.executions(), 15);
  EXPECT_EQ(id.models.source_dataset_size(), 15u);
  int random = 0;
  for (const ExploratoryAction& a : id.actions) {
    random += a.random;
    EXPECT_LE(a.control.cwiseAbs().maxCoeff(), 1.0);
  }
  EXPECT_EQ(random, 5);
}

TEST(SelfIdentifyTest, AdaptModeReplaysAgainstOracle) {
  SyntheticPlant plant(BuiltinPreset("preset-5"), 3);
  Dataset d(2);
  std::mt19937_64 rng(5);
  SelfIdentify(plant, LinearConfig(5, 5), d, IdentifyMode::kInitial, rng);
  ASSERT_EQ(d.size(), 10u);
  Dataset before = d;

  ExplorationConfig c = LinearConfig(5, 5);
  c.adapting_actions = 3;
  Identification id = SelfIdentify(plant, c, d, IdentifyMode::kAdapt, rng);
  ASSERT_EQ(d.size(), 13u);
  ASSERT_EQ(id.actions.size(), 3u);

  Dataset replay = before;
  for (const ExploratoryAction& a : id.actions) {
    auto want = testing::BruteSelect(replay);
    ASSERT_TRUE(want);
    EXPECT_EQ(a.control, want->control);
    EXPECT_FALSE(a.random);
    replay.Add(a.control, a.motion);
  }
  EXPECT_TRUE(replay == d);
  // existing pairs untouched and in order
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(d[i].control, before[i].control);
    EXPECT_EQ(d[i].motion, before[i].motion);
  }
}

TEST(SelfIdentifyTest, AdaptNeedsTwoSamples) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 1);
  Dataset d(2);
  d.Add(C2(0.1, 0.1), Vec3(0.1, 0.1, 0));
  std::mt19937_64 rng(1);
  EXPECT_THROW(SelfIdentify(plant, LinearConfig(2, 2), d, IdentifyMode::kAdapt, rng),
               std::invalid_argument);
}

TEST(SelfIdentifyTest, DimensionMismatchThrows) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 1);
  Dataset d(3);
  std::mt19937_64 rng(1);
  EXPECT_THROW(SelfIdentify(plant, LinearConfig(2, 2), d, IdentifyMode::kInitial, rng),
               std::invalid_argument);
}

TEST(SelfIdentifyTest, SelectedPhaseFallsBackWhenTooSmall) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 6);
  Dataset d(2);
  std::mt19937_64 rng(6);
  Identification id =
      SelfIdentify(plant, LinearConfig(0, 4), d, IdentifyMode::kInitial, rng);
  EXPECT_EQ(d.size(), 4u);
  EXPECT_TRUE(id.actions[0].random);
  EXPECT_TRUE(id.actions[1].random);
  EXPECT_FALSE(id.actions[2].random);
}

// Selected actions spread the motion samples out: the nearest-neighbor
// distances become more uniform than after the random seed actions alone.
TEST(SelfIdentifyTest, SelectedActionsEvenOutDensity) {
  int better = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticPlant plant(testing::LinearPreset(testing::TestJacobian()), seed);
    Dataset d(2);
    std::mt19937_64 rng(seed);
    SelfIdentify(plant, LinearConfig(10, 0), d, IdentifyMode::kInitial, rng);
    double before = testing::NearestNeighborCv(d);
    ExplorationConfig c = LinearConfig(10, 0);
    c.adapting_actions = 20;
    SelfIdentify(plant, c, d, IdentifyMode::kAdapt, rng);
    better += testing::NearestNeighborCv(d) < before;
  }
  EXPECT_GE(better, 9);
}

TEST(ModelsTest, DefaultLengthScales) {
  Dataset d(2);
  d.Add(C2(0.5, 0), Vec3(1, 0, 0));
  d.Add(C2(0, 0.5), Vec3(0, -4, 0));
  ExplorationConfig c = LinearConfig(2, 0);
  c.exploration_range = 0.8;
  ManipulationModels m = ManipulationModels::Fit(d, c);
  EXPECT_DOUBLE_EQ(m.forward().params().length_scale, 0.4);
  EXPECT_DOUBLE_EQ(m.inverse().params().length_scale, 2.0);
  c.forward_length_scale = 0.3;
  c.inverse_length_scale = 0.7;
  m = ManipulationModels::Fit(d, c);
  EXPECT_DOUBLE_EQ(m.forward().params().length_scale, 0.3);
  EXPECT_DOUBLE_EQ(m.inverse().params().length_scale, 0.7);
  EXPECT_EQ(m.control_dim(), 2);
  EXPECT_THROW(ManipulationModels::Fit(Dataset(2), c), std::invalid_argument);
}

TEST(ExplorationConfigTest, Validation) {
  ExplorationConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.random_actions = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ExplorationConfig{};
  c.exploration_range = -0.1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ExplorationConfig{};
  c.noise_jitter = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ExplorationConfig{};
  c.control_dim = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(TransferTest, ModelsEqualARefit) {
  SyntheticPlant plant(BuiltinPreset("preset-4"), 7);
  Dataset d(2);
  std::mt19937_64 rng(7);
  ExplorationConfig c = LinearConfig(12, 13);
  Identification id = SelfIdentify(plant, c, d, IdentifyMode::kInitial, rng);
  ASSERT_EQ(d.size(), 25u);

  std::stringstream file;
  WriteDataset(file, d);
  Dataset saved = ReadDataset(file);
  Transfer t = TransferModels(saved, c);
  EXPECT_TRUE(t.dataset == d);
  EXPECT_EQ(t.models.forward().dual_weights(), id.models.forward().dual_weights());
  EXPECT_EQ(t.models.inverse().dual_weights(), id.models.inverse().dual_weights());

  SyntheticPlant other(BuiltinPreset("preset-2"), 8);
  c.adapting_actions = 3;
  SelfIdentify(other, c, t.dataset, IdentifyMode::kAdapt, rng);
  EXPECT_EQ(t.dataset.size(), 28u);
}

TEST(TransferTest, Errors) {
  ExplorationConfig c = LinearConfig(2, 0);
  EXPECT_THROW(TransferModels(Dataset(2), c), std::invalid_argument);
  Dataset three(3);
  three.Add(Control::Zero(3), Vec3::Zero());
  EXPECT_THROW(TransferModels(three, c), std::invalid_argument);
}

}  // namespace
}  // namespace selfid
