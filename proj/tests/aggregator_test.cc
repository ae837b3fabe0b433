// Copyright 2026 The DPEMD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpemd/aggregator.h"

#include <cmath>
#include <random>
#include <vector>

#include "dpemd/distribution.h"
#include "dpemd/emd.h"
#include "dpemd/grid.h"
#include "dpemd/noise.h"
#include "dpemd/pyramid.h"
#include "gtest/gtest.h"
#include "test_oracles.h"

namespace dpemd {
namespace {

std::vector<SparseDist> RandomUsers(const Grid& g, int n, int points,
                                    std::mt19937_64& rng) {
  std::vector<SparseDist> users;
  for (int j = 0; j < n; ++j) {
    users.push_back(testing::RandomDist(g, 1 + j % points, rng));
  }
  return users;
}

SparseDist Mean(std::span<const SparseDist> users) {
  return SumDists(users)->Scaled(1.0 / static_cast<double>(users.size()));
}

TEST(AggregateCentralTest, ZeroNoiseRecoversSparseMean) {
  const Grid g = Grid::WithLevels(6);
  std::mt19937_64 rng(1);
  for (AggregationMode mode :
       {AggregationMode::kExperiment, AggregationMode::kTheory}) {
    // Five users with at most three points each: at most 15 support points.
    const std::vector<SparseDist> users = RandomUsers(g, 5, 3, rng);
    AggregationConfig config;
    config.mode = mode;
    config.disable_noise = true;
    auto result = AggregateCentral(users, config);
    ASSERT_TRUE(result.ok()) << result.status();
    EXPECT_FALSE(result->uniform_fallback);
    EXPECT_LE(Emd(result->normalized, Mean(users))->cost, 1e-6);
  }
}

TEST(AggregateCentralTest, SameSeedSameOutput) {
  const Grid g = Grid::WithLevels(5);
  std::mt19937_64 rng(2);
  const std::vector<SparseDist> users = RandomUsers(g, 40, 4, rng);
  AggregationConfig config;
  config.seed = 9;
  auto a = AggregateCentral(users, config);
  auto b = AggregateCentral(users, config);
  config.seed = 10;
  auto c = AggregateCentral(users, config);
  ASSERT_TRUE(a.ok() && b.ok() && c.ok());
  EXPECT_EQ(a->normalized.ToDense(), b->normalized.ToDense());
  EXPECT_NE(a->normalized.ToDense(), c->normalized.ToDense());
}

TEST(AggregateCentralTest, RejectsBadInput) {
  const Grid g = Grid::WithLevels(3);
  std::vector<SparseDist> users = {SparseDist::PointMass(g, {1, 1}, 2.0)};
  EXPECT_FALSE(AggregateCentral(users, {}).ok());
  users = {SparseDist::PointMass(g, {1, 1})};
  AggregationConfig config;
  config.eps = 0.0;
  EXPECT_FALSE(AggregateCentral(users, config).ok());
  EXPECT_FALSE(AggregateCentral({}, {}).ok());
}

TEST(AggregateCentralTest, NoiseMatchesSchedule) {
  const Grid g = Grid::WithLevels(7);
  const SparseDist s = SparseDist::PointMass(g, {3, 3}, 10.0);
  const NoiseSchedule schedule = *BudgetSchedule(1.0, 7, 20, 0.8);
  Rng rng({5, kCentralStream});
  std::vector<std::vector<double>> noise;
  NoisyMeasurements(s, schedule, rng, false, &noise);
  // Mean absolute Laplace noise is the scale 1 / eps_i.
  for (int i = 5; i <= 7; ++i) {
    double total = 0.0;
    for (double v : noise[i]) total += std::fabs(v);
    const double mean = total / static_cast<double>(noise[i].size());
    const double scale = schedule.LaplaceScale(i);
    EXPECT_NEAR(mean / scale, 1.0, 6.0 / std::sqrt(noise[i].size())) << i;
  }
}

TEST(AggregateCentralTest, MeasurementsAreScaledCellSums) {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(3);
  const SparseDist s = testing::RandomDist(g, 5, rng, 7.0);
  const NoiseSchedule schedule = *BudgetSchedule(1.0, 3, 4, 0.8);
  Rng noise_rng({1, 1});
  const PyramidVec y = NoisyMeasurements(s, schedule, noise_rng, true);
  for (int i = 0; i <= 3; ++i) {
    for (size_t k = 0; k < CellsAtLevel(i); ++k) {
      const CellId c = CellAt(i, k);
      EXPECT_NEAR(y.at(c),
                  std::ldexp(testing::CellMass(g, s.ToDense(), c), -i), 1e-12);
    }
  }
}

// Adding or removing one unit-mass user moves each level's cell sums by at
// most 1 in L1.
TEST(SensitivityTest, OneUserMovesEachLevelByAtMostOne) {
  const Grid g = Grid::WithLevels(5);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<SparseDist> users = RandomUsers(g, 8, 6, rng);
    const SparseDist with = *SumDists(users);
    const SparseDist without =
        *SumDists(std::span<const SparseDist>(users).first(7));
    const auto a = CellSumPyramid(g, with.ToDense());
    const auto b = CellSumPyramid(g, without.ToDense());
    for (int i = 0; i <= 5; ++i) {
      double l1 = 0.0;
      for (size_t k = 0; k < a[i].size(); ++k) l1 += std::fabs(a[i][k] - b[i][k]);
      EXPECT_LE(l1, 1.0 + 1e-9);
    }
  }
}

TEST(NormalizeTest, ScalesToUnitMass) {
  const Grid g = Grid::WithLevels(2);
  auto s = *SparseDist::FromEntries(g, {{{0, 0}, 1.0}, {{1, 2}, 3.0}});
  const Normalized n = Normalize(s);
  EXPECT_FALSE(n.uniform_fallback);
  EXPECT_DOUBLE_EQ(n.dist.MassAt({0, 0}), 0.25);
  EXPECT_DOUBLE_EQ(n.dist.MassAt({1, 2}), 0.75);
}

TEST(NormalizeTest, EmptyFallsBackToUniform) {
  const Grid g = Grid::WithLevels(2);
  const Normalized n = Normalize(*SparseDist::FromEntries(g, {}));
  EXPECT_TRUE(n.uniform_fallback);
  EXPECT_EQ(n.dist.size(), 16);
  EXPECT_DOUBLE_EQ(n.dist.MassAt({3, 3}), 1.0 / 16);
}

// If an estimate is within zeta of a mass-n vector in the EMD norm, its
// normalization is within 4 zeta / n of the normalized vector.
TEST(NormalizeTest, ErrorBoundAfterNormalizing) {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> total(0.5, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double n = 1.0 + trial % 7;
    const SparseDist s = testing::RandomDist(g, 1 + trial % 5, rng, n);
    const SparseDist est =
        testing::RandomDist(g, 1 + trial % 6, rng, total(rng) * n);
    const double zeta = *EmdNorm(g, *DenseDifference(est, s));
    const double err = Emd(Normalize(est).dist, s.Scaled(1.0 / n))->cost;
    EXPECT_LE(err, 4.0 * zeta / n + 1e-9);
  }
}

TEST(DenseTest, CoarseLevel) {
  EXPECT_EQ(DenseLevel(1.0, 64, 8), 3);
  EXPECT_EQ(DenseLevel(1.0, 63, 8), 2);
  EXPECT_EQ(DenseLevel(1.0, 1 << 30, 8), 8);
  EXPECT_EQ(DenseLevel(0.1, 3, 8), 0);
}

TEST(DenseTest, ZeroNoiseIsTheCoarsenedMean) {
  const Grid g = Grid::WithLevels(4);
  std::vector<SparseDist> users;
  for (int i = 0; i < 16; ++i) {
    users.push_back(SparseDist::PointMass(g, {i % 4 * 4 + 1, i / 4 * 4 + 2}));
  }
  auto result = AggregateDense(users, 1.0, 0, true);
  ASSERT_TRUE(result.ok()) << result.status();
  EXPECT_EQ(result->coarse_level, 2);
  // Each coarse cell holds one user.
  double total = 0.0;
  for (const SparseDist::Entry& e : result->normalized.entries()) {
    EXPECT_NEAR(e.mass, 1.0 / 16, 1e-12);
    total += e.mass;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(result->normalized.size(), 16);
}

TEST(DenseTest, OutputIsNonnegativeUnitMass) {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(6);
  const std::vector<SparseDist> users = RandomUsers(g, 30, 3, rng);
  auto result = AggregateDense(users, 0.5, 3);
  ASSERT_TRUE(result.ok()) << result.status();
  double total = 0.0;
  for (const SparseDist::Entry& e : result->normalized.entries()) {
    EXPECT_GE(e.mass, 0.0);
    total += e.mass;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(BaselineTest, ZeroNoiseIsTheMean) {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(7);
  const std::vector<SparseDist> users = RandomUsers(g, 12, 4, rng);
  BaselineConfig config;
  config.disable_noise = true;
  auto result = BaselineLaplace(users, config);
  ASSERT_TRUE(result.ok());
  const std::vector<double> want = Mean(users).ToDense();
  const std::vector<double> got = result->dist.ToDense();
  for (size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
}

TEST(BaselineTest, FullThresholdChangesNothing) {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(8);
  const std::vector<SparseDist> users = RandomUsers(g, 12, 4, rng);
  BaselineConfig config;
  config.seed = 4;
  auto plain = BaselineLaplace(users, config);
  config.threshold_pct = 100.0;
  auto full = BaselineLaplace(users, config);
  ASSERT_TRUE(plain.ok() && full.ok());
  EXPECT_EQ(plain->dist.ToDense(), full->dist.ToDense());
}

TEST(BaselineTest, ThresholdKeepsAtMostTheTopCells) {
  const Grid g = Grid::WithLevels(5);
  std::mt19937_64 rng(9);
  const std::vector<SparseDist> users = RandomUsers(g, 12, 4, rng);
  BaselineConfig config;
  config.seed = 4;
  config.threshold_pct = 1.0;
  auto result = BaselineLaplace(users, config);
  ASSERT_TRUE(result.ok());
  EXPECT_LE(result->dist.size(), ThresholdCount(1.0, 1024));
}

TEST(BaselineTest, ThresholdCount) {
  EXPECT_EQ(ThresholdCount(1.0, 4096), 41);
  EXPECT_EQ(ThresholdCount(0.001, 4096), 1);
  EXPECT_EQ(ThresholdCount(100.0, 4096), 4096);
  EXPECT_EQ(ThresholdCount(25.0, 16), 4);
  EXPECT_EQ(ThresholdCount(0.0, 16), 0);
}

TEST(CoresetTest, ZeroNoiseKeepsThePoints) {
  const Grid g = Grid::WithLevels(5);
  const std::vector<GridPoint> points = {{1, 1}, {1, 1}, {30, 7}, {12, 20}};
  AggregationConfig config;
  config.disable_noise = true;
  auto s = Coreset(g, points, config);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s->MassAt({1, 1}), 2.0, 1e-9);
  EXPECT_NEAR(s->MassAt({30, 7}), 1.0, 1e-9);
  EXPECT_NEAR(s->Total(), 4.0, 1e-9);
}

}  // namespace
}  // namespace dpemd
