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

#include "dpemd/shuffle.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dpemd/distribution.h"
#include "dpemd/grid.h"
#include "dpemd/pyramid.h"
#include "gtest/gtest.h"
#include "test_oracles.h"

namespace dpemd {
namespace {

std::vector<SparseDist> Users(const Grid& g, int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SparseDist> users;
  for (int j = 0; j < n; ++j) {
    users.push_back(testing::RandomDist(g, 1 + j % 3, rng));
  }
  return users;
}

TEST(ShareCountTest, WorkedValue) {
  EXPECT_EQ(*ComputeShareCount(5.0, 1e-5, 341, 12800, 50), 15);
}

TEST(ShareCountTest, Monotone) {
  int previous = 1 << 30;
  for (double delta : {1e-12, 1e-9, 1e-6, 1e-3, 0.1}) {
    const int r = *ComputeShareCount(1.0, delta, 1000, 1 << 20, 100);
    EXPECT_LE(r, previous);
    previous = r;
  }
  previous = 1 << 30;
  for (int64_t n : {2, 10, 100, 10000, 1000000}) {
    const int r = *ComputeShareCount(1.0, 1e-6, 1000, 1 << 20, n);
    EXPECT_LE(r, previous);
    EXPECT_GE(r, 2);
    previous = r;
  }
}

TEST(ShareCountTest, RejectsBadArguments) {
  EXPECT_FALSE(ComputeShareCount(1.0, 1e-5, 10, 100, 1).ok());
  EXPECT_FALSE(ComputeShareCount(1.0, 0.0, 10, 100, 10).ok());
  EXPECT_FALSE(ComputeShareCount(1.0, 1.0, 10, 100, 10).ok());
  EXPECT_FALSE(ComputeShareCount(0.0, 1e-5, 10, 100, 10).ok());
  EXPECT_FALSE(ComputeShareCount(1.0, 1e-5, 0, 100, 10).ok());
  EXPECT_EQ(ComputeShareCount(1e9, 1e-5, 10, 100, 10).status().code(),
            absl::StatusCode::kResourceExhausted);
}

TEST(ShuffleParamsTest, CountsMeasuredCoordinates) {
  EXPECT_EQ(MeasurementCount(4), 341);
  EXPECT_EQ(MeasurementCount(4, 2), 336);
  const Grid g = Grid::WithLevels(4);
  ShuffleConfig config;
  config.eps = 5.0;
  config.mode = AggregationMode::kTheory;
  const ShuffleParams p = *MakeShuffleParams(g, 50, config);
  EXPECT_EQ(p.measurements, 341);
  EXPECT_EQ(p.modulus, 12800);
  EXPECT_EQ(p.shares, 15);
  EXPECT_EQ(p.level_offset.back(), 341);
  config.mode = AggregationMode::kExperiment;
  const ShuffleParams q = *MakeShuffleParams(g, 50, config);
  EXPECT_EQ(q.measurements, 336);
  EXPECT_EQ(q.level_offset[2], 0);
  EXPECT_EQ(q.level_offset[3], 16);
}

TEST(ShuffleParamsTest, Communication) {
  const Grid g = Grid::WithLevels(4);
  ShuffleConfig config;
  config.eps = 5.0;
  config.mode = AggregationMode::kTheory;
  const Communication c = CommunicationCost(*MakeShuffleParams(g, 50, config));
  EXPECT_EQ(c.messages_per_user, 15 * 341);
  // 341 * 12800 = 4364800 < 2^23.
  EXPECT_EQ(c.bits_per_message, 23);
  EXPECT_EQ(c.bits_per_user, 15 * 341 * 23);
  EXPECT_EQ(c.bytes_per_user, 14706);
}

TEST(CenterResidueTest, SymmetricRange) {
  EXPECT_EQ(CenterResidue(0, 10), 0);
  EXPECT_EQ(CenterResidue(5, 10), 5);
  EXPECT_EQ(CenterResidue(6, 10), -4);
  EXPECT_EQ(CenterResidue(-3, 10), -3);
  EXPECT_EQ(CenterResidue(13, 10), 3);
  EXPECT_EQ(CenterResidue(-25, 10), 5);
}

TEST(EncodeClientTest, SharesSumToTheNoisyValue) {
  const Grid g = Grid::WithLevels(3);
  const std::vector<SparseDist> users = Users(g, 20, 1);
  const ShuffleParams p = *MakeShuffleParams(g, 20, {});
  Rng rng({1, 2});
  const EncodedClient enc = *EncodeClient(users[3], p, rng);
  ASSERT_EQ(enc.messages.size(),
            static_cast<size_t>(p.shares * p.measurements));
  std::vector<int64_t> sums(p.measurements, 0);
  for (const ShuffleMessage& m : enc.messages) {
    ASSERT_GE(m.share, 0);
    ASSERT_LT(m.share, p.modulus);
    sums[m.coord] = (sums[m.coord] + m.share) % p.modulus;
  }
  for (int64_t c = 0; c < p.measurements; ++c) {
    EXPECT_EQ(CenterResidue(sums[c] - enc.noisy[c], p.modulus), 0);
  }
}

TEST(EncodeClientTest, RejectsNonUnitInput) {
  const Grid g = Grid::WithLevels(3);
  const ShuffleParams p = *MakeShuffleParams(g, 20, {});
  Rng rng({1, 2});
  EXPECT_FALSE(EncodeClient(SparseDist::PointMass(g, {0, 0}, 2.0), p, rng).ok());
  EXPECT_FALSE(EncodeClient(SparseDist::PointMass(Grid::WithLevels(2), {0, 0}),
                            p, rng)
                   .ok());
}

TEST(AnalyzeTest, OrderDoesNotMatter) {
  const Grid g = Grid::WithLevels(3);
  const std::vector<SparseDist> users = Users(g, 10, 2);
  const ShuffleParams p = *MakeShuffleParams(g, 10, {});
  std::vector<ShuffleMessage> pool;
  for (size_t j = 0; j < users.size(); ++j) {
    Rng rng({7, j});
    const EncodedClient enc = *EncodeClient(users[j], p, rng);
    pool.insert(pool.end(), enc.messages.begin(), enc.messages.end());
  }
  const PyramidVec a = *Analyze(pool, p);
  std::mt19937_64 shuffler(3);
  std::shuffle(pool.begin(), pool.end(), shuffler);
  const PyramidVec b = *Analyze(pool, p);
  for (int i = 0; i <= 3; ++i) {
    const auto la = a.level(i);
    const auto lb = b.level(i);
    EXPECT_TRUE(std::equal(la.begin(), la.end(), lb.begin()));
  }
}

TEST(AnalyzeTest, RejectsOutOfRangeMessages) {
  const Grid g = Grid::WithLevels(2);
  const ShuffleParams p = *MakeShuffleParams(g, 10, {});
  std::vector<ShuffleMessage> bad = {{p.measurements, 0}};
  EXPECT_FALSE(Analyze(bad, p).ok());
  bad = {{0, p.modulus}};
  EXPECT_FALSE(Analyze(bad, p).ok());
  bad = {{0, -1}};
  EXPECT_FALSE(Analyze(bad, p).ok());
}

// With negligible noise the decoded cell sums differ from the truth only by
// rounding: at most n / B per coordinate.
TEST(SimulateShuffleTest, RoundingErrorOnly) {
  const Grid g = Grid::WithLevels(3);
  const int n = 30;
  const std::vector<SparseDist> users = Users(g, n, 3);
  ShuffleConfig config;
  config.eps = 1e4;
  config.scale = 4;
  config.mode = AggregationMode::kTheory;
  config.modulus_headroom = 3;
  const ShuffleRun run = *SimulateShuffle(users, config);
  EXPECT_EQ(run.wraparound_violations, 0);
  const PyramidVec truth = ApplyPyramid(*SumDists(users));
  for (int i = 0; i <= 3; ++i) {
    for (size_t k = 0; k < CellsAtLevel(i); ++k) {
      const CellId c = CellAt(i, k);
      const double err =
          std::ldexp(truth.at(c) - run.measurements.at(c), i);
      EXPECT_GE(err, -1e-9);
      EXPECT_LE(err, static_cast<double>(n) / config.scale + 1e-9);
    }
  }
}

TEST(SimulateShuffleTest, MaterializedMatchesStreaming) {
  const Grid g = Grid::WithLevels(3);
  const std::vector<SparseDist> users = Users(g, 25, 4);
  ShuffleConfig config;
  config.seed = 5;
  const ShuffleRun a = *SimulateShuffle(users, config, false);
  const ShuffleRun b = *SimulateShuffle(users, config, true);
  EXPECT_EQ(a.result.normalized.ToDense(), b.result.normalized.ToDense());
  EXPECT_EQ(a.wraparound_violations, b.wraparound_violations);
}

TEST(SimulateShuffleTest, RejectsBadInput) {
  const Grid g = Grid::WithLevels(3);
  EXPECT_FALSE(SimulateShuffle({}, {}).ok());
  std::vector<SparseDist> one = {SparseDist::PointMass(g, {1, 1})};
  EXPECT_FALSE(SimulateShuffle(one, {}).ok());
  std::vector<SparseDist> mixed = {SparseDist::PointMass(g, {1, 1}),
                                   SparseDist::PointMass(Grid::WithLevels(2),
                                                         {1, 1})};
  EXPECT_FALSE(SimulateShuffle(mixed, {}).ok());
  std::vector<SparseDist> two = {SparseDist::PointMass(g, {1, 1}),
                                 SparseDist::PointMass(g, {2, 1})};
  ShuffleConfig config;
  config.scale = 0;
  EXPECT_FALSE(SimulateShuffle(two, config).ok());
}

}  // namespace
}  // namespace dpemd
