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

#include "dpemd/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "dpemd/aggregator.h"
#include "dpemd/distribution.h"
#include "dpemd/emd.h"
#include "dpemd/grid.h"
#include "gtest/gtest.h"
#include "test_oracles.h"

namespace dpemd {
namespace {

std::vector<GridPoint> RandomPoints(const Grid& g, int n,
                                    std::mt19937_64& rng) {
  std::uniform_int_distribution<int32_t> coord(0, g.side() - 1);
  std::vector<GridPoint> out;
  for (int i = 0; i < n; ++i) out.push_back({coord(rng), coord(rng)});
  return out;
}

SparseDist Counts(const Grid& g, const std::vector<GridPoint>& points) {
  std::vector<SparseDist::Entry> e;
  for (const GridPoint& p : points) e.push_back({p, 1.0});
  return *SparseDist::FromEntries(g, e);
}

TEST(CostTest, WorkedExample) {
  const Grid g = Grid::WithLevels(2);
  const std::vector<GridPoint> points = {{0, 0}, {1, 0}, {3, 3}};
  const std::vector<GridPoint> centers = {{0, 0}, {3, 2}};
  // 0 + 1/4 + 1/4.
  EXPECT_DOUBLE_EQ(*CostPoints(g, points, centers), 0.5);
}

TEST(CostTest, PointsAndVectorAgree) {
  const Grid g = Grid::WithLevels(5);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<GridPoint> points = RandomPoints(g, 30, rng);
    const std::vector<GridPoint> centers = RandomPoints(g, 1 + trial % 4, rng);
    EXPECT_NEAR(*CostPoints(g, points, centers),
                *CostVec(Counts(g, points), centers), 1e-9);
  }
}

TEST(CostTest, RejectsBadCenters) {
  const Grid g = Grid::WithLevels(2);
  const std::vector<GridPoint> points = {{0, 0}};
  EXPECT_FALSE(CostPoints(g, points, {}).ok());
  const std::vector<GridPoint> off = {{4, 0}};
  EXPECT_FALSE(CostPoints(g, points, off).ok());
}

TEST(CandidateCentersTest, CellCorners) {
  const Grid g = Grid::WithLevels(3);
  const std::vector<GridPoint> c = CandidateCenters(g, 1);
  ASSERT_EQ(c.size(), 4);
  EXPECT_EQ(c[0], (GridPoint{0, 0}));
  EXPECT_EQ(c[1], (GridPoint{4, 0}));
  EXPECT_EQ(c[3], (GridPoint{4, 4}));
  EXPECT_EQ(CandidateCenters(g, 3).size(), 64);
}

TEST(ForEachSubsetTest, VisitsEverySubsetOnce) {
  std::vector<std::vector<int>> seen;
  ASSERT_TRUE(ForEachSubset(5, 3, [&](std::span<const int> s) {
                seen.emplace_back(s.begin(), s.end());
                return true;
              }).ok());
  EXPECT_EQ(seen.size(), 10);
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  EXPECT_EQ(seen.front(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(seen.back(), (std::vector<int>{2, 3, 4}));
}

TEST(ForEachSubsetTest, StopsEarlyAndEnforcesBudget) {
  int calls = 0;
  ASSERT_TRUE(ForEachSubset(10, 2, [&](std::span<const int>) {
                return ++calls < 4;
              }).ok());
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(ForEachSubset(100, 10, [](std::span<const int>) { return true; })
                .code(),
            absl::StatusCode::kResourceExhausted);
  EXPECT_FALSE(ForEachSubset(3, 4, [](std::span<const int>) { return true; })
                   .ok());
  calls = 0;
  ASSERT_TRUE(ForEachSubset(4, 0, [&](std::span<const int> s) {
                EXPECT_TRUE(s.empty());
                return ++calls > 0;
              }).ok());
  EXPECT_EQ(calls, 1);
}

TEST(BruteKMedianTest, WorkedExample) {
  const Grid g = Grid::WithLevels(2);
  auto x = *SparseDist::FromEntries(
      g, {{{0, 0}, 1.0}, {{0, 1}, 1.0}, {{3, 3}, 1.0}, {{3, 0}, 1.0}});
  const std::vector<GridPoint> all = CandidateCenters(g, 2);
  const KMedianSolution one = *BruteKMedian(x, 1, all);
  const KMedianSolution two = *BruteKMedian(x, 2, all);
  // Brute force over all 16 points.
  double best = std::numeric_limits<double>::infinity();
  for (const GridPoint& c : all) {
    best = std::min(best, *CostVec(x, std::vector<GridPoint>{c}));
  }
  EXPECT_DOUBLE_EQ(one.cost, best);
  // {(0,0), (0,1)} costs 1/4 and {(3,3), (3,0)} costs 3/4.
  EXPECT_DOUBLE_EQ(two.cost, 1.0);
  const KMedianSolution four = *BruteKMedian(x, 4, all);
  EXPECT_DOUBLE_EQ(four.cost, 0.0);
}

TEST(BruteKMedianTest, MoreCentersNeverHurt) {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(2);
  const SparseDist x = testing::RandomDist(g, 10, rng);
  const std::vector<GridPoint> candidates = CandidateCenters(g, 2);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 4; ++k) {
    const double cost = BruteKMedian(x, k, candidates)->cost;
    EXPECT_LE(cost, previous + 1e-12);
    previous = cost;
  }
  // A superset of candidates cannot do worse.
  EXPECT_LE(BruteKMedian(x, 2, CandidateCenters(g, 3))->cost,
            BruteKMedian(x, 2, candidates)->cost + 1e-12);
  EXPECT_EQ(BruteKMedian(x, 16, candidates)->centers.size(), 16);
}

// Moving mass changes the cost by at most the distance it travels.
TEST(CostTest, LipschitzInEmd) {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const SparseDist a = testing::RandomDist(g, 6, rng);
    const SparseDist b = testing::RandomDist(g, 6, rng);
    const std::vector<GridPoint> centers = RandomPoints(g, 1 + trial % 3, rng);
    EXPECT_LE(std::fabs(*CostVec(a, centers) - *CostVec(b, centers)),
              Emd(a, b)->cost + 1e-9);
  }
}

TEST(CoresetCheckTest, ExactCopyHasNoError) {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(4);
  const std::vector<GridPoint> points = RandomPoints(g, 40, rng);
  const CoresetReport r = *CoresetCheck(g, points, Counts(g, points), 2, 0.0,
                                        1.0, CandidateCenters(g, 2));
  EXPECT_NEAR(r.kappa, 0.0, 1e-9);
  EXPECT_EQ(r.center_sets, 120);
}

TEST(CoresetCheckTest, MatchesDirectMaximum) {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(5);
  const std::vector<GridPoint> points = RandomPoints(g, 25, rng);
  const SparseDist core = testing::RandomDist(g, 5, rng, 25.0);
  const std::vector<GridPoint> candidates = CandidateCenters(g, 2);
  const double lambda = 0.1;
  const CoresetReport r =
      *CoresetCheck(g, points, core, 2, lambda, 2.0, candidates);
  double worst = 0.0;
  double raw = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    for (size_t j = i + 1; j < candidates.size(); ++j) {
      const std::vector<GridPoint> c = {candidates[i], candidates[j]};
      const double truth = *CostPoints(g, points, c);
      const double dev = std::fabs(*CostVec(core, c) - truth);
      worst = std::max(worst, dev - lambda * truth);
      raw = std::max(raw, dev);
    }
  }
  EXPECT_NEAR(r.kappa, worst, 1e-9);
  EXPECT_NEAR(r.max_deviation, raw, 1e-9);
  EXPECT_NEAR(r.fitted_c, r.kappa * 2.0 / std::sqrt(2.0), 1e-12);
}

TEST(CoresetCheckTest, ZeroNoiseCoresetIsExact) {
  const Grid g = Grid::WithLevels(5);
  std::mt19937_64 rng(6);
  std::vector<GridPoint> points;
  const std::vector<GridPoint> sites = RandomPoints(g, 4, rng);
  for (int i = 0; i < 60; ++i) points.push_back(sites[i % 4]);
  AggregationConfig config;
  config.disable_noise = true;
  const SparseDist core = *Coreset(g, points, config);
  const CoresetReport r = *CoresetCheck(g, points, core, 2, 0.0, 1.0,
                                        CandidateCenters(g, 2));
  EXPECT_NEAR(r.kappa, 0.0, 1e-6);
}

TEST(CoresetCheckTest, RejectsBadArguments) {
  const Grid g = Grid::WithLevels(2);
  const std::vector<GridPoint> points = {{0, 0}};
  const SparseDist core = SparseDist::PointMass(g, {0, 0});
  const std::vector<GridPoint> c = CandidateCenters(g, 1);
  EXPECT_FALSE(CoresetCheck(g, {}, core, 1, 0.0, 1.0, c).ok());
  EXPECT_FALSE(CoresetCheck(g, points, core, 0, 0.0, 1.0, c).ok());
  EXPECT_FALSE(CoresetCheck(g, points, core, 1, -1.0, 1.0, c).ok());
  EXPECT_FALSE(CoresetCheck(g, points, core, 1, 0.0, 0.0, c).ok());
  EXPECT_FALSE(CoresetCheck(Grid::WithLevels(3), points, core, 1, 0.0, 1.0, c)
                   .ok());
}

}  // namespace
}  // namespace dpemd
