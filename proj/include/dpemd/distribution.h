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

#ifndef DPEMD_DISTRIBUTION_H_
#define DPEMD_DISTRIBUTION_H_

#include <cstddef>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpemd/grid.h"

namespace dpemd {

// Nonnegative sparse vector over the points of a grid. Entries are kept
// sorted by grid index and never hold zero mass.
class SparseDist {
 public:
  struct Entry {
    GridPoint point;
    double mass = 0.0;
  };

  explicit SparseDist(Grid grid) : grid_(grid) {}

  // Duplicate points are summed and zero masses dropped. Negative or
  // non-finite masses and points outside the grid are rejected.
  static absl::StatusOr<SparseDist> FromEntries(Grid grid,
                                                std::vector<Entry> entries);
  // `dense` is indexed by Grid::Index.
  static absl::StatusOr<SparseDist> FromDense(Grid grid,
                                              std::span<const double> dense);
  static SparseDist PointMass(Grid grid, GridPoint point, double mass = 1.0);

  const Grid& grid() const { return grid_; }
  std::span<const Entry> entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double Total() const;
  double MassAt(GridPoint point) const;
  std::vector<double> ToDense() const;
  SparseDist Scaled(double factor) const;

 private:
  Grid grid_;
  std::vector<Entry> entries_;
};

// Fails unless the total mass is within `tolerance` of one.
absl::Status CheckUnitMass(const SparseDist& dist, double tolerance = 1e-9);

// Entry-wise sum. All inputs must share one grid.
absl::StatusOr<SparseDist> SumDists(std::span<const SparseDist> dists);

// Dense difference a - b on their common grid.
absl::StatusOr<std::vector<double>> DenseDifference(const SparseDist& a,
                                                    const SparseDist& b);

}  // namespace dpemd

#endif  // DPEMD_DISTRIBUTION_H_
