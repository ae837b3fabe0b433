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

#include "dpemd/pyramid.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/simd/kernels.h"

namespace dpemd {

PyramidVec::PyramidVec(int levels) : levels_(levels) {
  values_.reserve(levels + 1);
  for (int i = 0; i <= levels; ++i) values_.emplace_back(CellsAtLevel(i), 0.0);
}

absl::StatusOr<std::vector<double>> PartitionSums(const SparseDist& v,
                                                  int level) {
  const Grid& grid = v.grid();
  if (level < 0 || level > grid.levels()) {
    return absl::OutOfRangeError(
        absl::StrCat("level ", level, " outside [0, ", grid.levels(), "]"));
  }
  std::vector<double> sums(CellsAtLevel(level), 0.0);
  const int shift = grid.levels() - level;
  for (const auto& e : v.entries()) {
    const CellId cell{level, e.point.ix >> shift, e.point.iy >> shift};
    sums[CellIndex(cell)] += e.mass;
  }
  return sums;
}

std::vector<std::vector<double>> CellSumPyramid(const Grid& grid,
                                                std::span<const double> dense) {
  const int levels = grid.levels();
  std::vector<std::vector<double>> sums(levels + 1);
  sums[levels].assign(dense.begin(), dense.end());
  for (int i = levels; i > 0; --i) {
    sums[i - 1].assign(CellsAtLevel(i - 1), 0.0);
    simd::Pool2x2Grid(sums[i], static_cast<size_t>(SideAtLevel(i)),
                      sums[i - 1]);
  }
  return sums;
}

PyramidVec ApplyPyramid(const SparseDist& v) {
  const Grid& grid = v.grid();
  PyramidVec out(grid.levels());
  for (int i = 0; i <= grid.levels(); ++i) {
    const double scale = std::ldexp(1.0, -i);
    const int shift = grid.levels() - i;
    std::span<double> level = out.level(i);
    for (const auto& e : v.entries()) {
      const CellId cell{i, e.point.ix >> shift, e.point.iy >> shift};
      level[CellIndex(cell)] += e.mass;
    }
    for (double& x : level) x *= scale;
  }
  return out;
}

PyramidVec ApplyPyramidDense(const Grid& grid, std::span<const double> dense) {
  std::vector<std::vector<double>> sums = CellSumPyramid(grid, dense);
  PyramidVec out(grid.levels());
  for (int i = 0; i <= grid.levels(); ++i) {
    const double scale = std::ldexp(1.0, -i);
    std::span<double> level = out.level(i);
    for (size_t c = 0; c < level.size(); ++c) level[c] = scale * sums[i][c];
  }
  return out;
}

absl::StatusOr<double> PyramidL1(const Grid& grid, std::span<const double> z) {
  if (z.size() != grid.num_points()) {
    return absl::InvalidArgumentError(
        absl::StrCat("vector has ", z.size(), " entries, grid has ",
                     grid.num_points()));
  }
  std::vector<std::vector<double>> sums = CellSumPyramid(grid, z);
  double total = 0.0;
  for (int i = 0; i <= grid.levels(); ++i) {
    total += std::ldexp(simd::AbsSum(sums[i]), -i);
  }
  return total;
}

}  // namespace dpemd
