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

// Planar k-median cost under the L1 metric, exhaustive small-instance
// solvers and an empirical coreset check.

#ifndef DPEMD_CLUSTERING_H_
#define DPEMD_CLUSTERING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"

namespace dpemd {

// Upper limit on the number of center sets enumerated.
inline constexpr int64_t kMaxCenterSets = 1000000;

// sum over x of min over c of |x - c|_1, in unit-square coordinates.
absl::StatusOr<double> CostPoints(const Grid& grid,
                                  std::span<const GridPoint> points,
                                  std::span<const GridPoint> centers);
// Mass-weighted version for a grid vector.
absl::StatusOr<double> CostVec(const SparseDist& x,
                               std::span<const GridPoint> centers);

// Candidate centers: the corner points of all cells at `level` of `grid`.
std::vector<GridPoint> CandidateCenters(const Grid& grid, int level);

// Calls fn on every k-subset of n items (as ascending index lists) and
// stops early if fn returns false. Fails if C(n, k) > kMaxCenterSets.
absl::Status ForEachSubset(int n, int k,
                           const std::function<bool(std::span<const int>)>& fn);

struct KMedianSolution {
  std::vector<GridPoint> centers;
  double cost = 0.0;
};

// Exhaustive optimum over k-subsets of `candidates`. If k is at least the
// number of candidates, all of them are returned.
absl::StatusOr<KMedianSolution> BruteKMedian(
    const SparseDist& x, int k, std::span<const GridPoint> candidates);

struct CoresetReport {
  int k = 0;
  double lambda = 0.0;
  double eps = 0.0;
  // max over center sets of |cost_C(s) - cost_C(X)| - lambda cost_C(X),
  // clamped at 0.
  double kappa = 0.0;
  // The same maximum without the lambda term.
  double max_deviation = 0.0;
  // kappa * eps / sqrt(k).
  double fitted_c = 0.0;
  int64_t center_sets = 0;
};

absl::StatusOr<CoresetReport> CoresetCheck(
    const Grid& grid, std::span<const GridPoint> points,
    const SparseDist& coreset, int k, double lambda, double eps,
    std::span<const GridPoint> candidates);

}  // namespace dpemd

#endif  // DPEMD_CLUSTERING_H_
