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

// The scaled pyramidal transform: level i of the transform of v holds, for
// every level-i cell, 2^-i times the mass of v inside that cell.

#ifndef DPEMD_PYRAMID_H_
#define DPEMD_PYRAMID_H_

#include <cstddef>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"

namespace dpemd {

// Dense per-level arrays; level i has 4^i values in CellIndex order.
class PyramidVec {
 public:
  // Zero vector for a grid with `levels` levels (levels + 1 arrays).
  explicit PyramidVec(int levels);

  int levels() const { return levels_; }
  std::span<double> level(int i) { return values_[i]; }
  std::span<const double> level(int i) const { return values_[i]; }
  double& at(const CellId& c) { return values_[c.level][CellIndex(c)]; }
  double at(const CellId& c) const { return values_[c.level][CellIndex(c)]; }

  friend bool operator==(const PyramidVec&, const PyramidVec&) = default;

 private:
  int levels_;
  std::vector<std::vector<double>> values_;
};

// Unscaled mass of `v` inside each cell of `level`.
absl::StatusOr<std::vector<double>> PartitionSums(const SparseDist& v,
                                                  int level);

// Unscaled cell sums of a dense grid vector at every level; element i of the
// result is level i. Finer levels are pooled 2x2 into coarser ones.
std::vector<std::vector<double>> CellSumPyramid(const Grid& grid,
                                                std::span<const double> dense);

PyramidVec ApplyPyramid(const SparseDist& v);
PyramidVec ApplyPyramidDense(const Grid& grid, std::span<const double> dense);

// sum_i 2^-i sum_c |sum_{p in c} z(p)| for a signed dense grid vector. This
// upper-bounds the EMD norm of z.
absl::StatusOr<double> PyramidL1(const Grid& grid, std::span<const double> z);

}  // namespace dpemd

#endif  // DPEMD_PYRAMID_H_
