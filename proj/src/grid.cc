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

#include "dpemd/grid.h"

#include <cmath>
#include <cstdlib>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpemd {

absl::StatusOr<Grid> Grid::Create(int64_t side) {
  for (int levels = 0; levels <= kMaxGridLevels; ++levels) {
    if (side == int64_t{1} << levels) return Grid(levels);
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "grid side must be a power of two in [1, 2^", kMaxGridLevels,
      "], got ", side));
}

Grid Grid::WithLevels(int levels) {
  if (levels < 0) levels = 0;
  if (levels > kMaxGridLevels) levels = kMaxGridLevels;
  return Grid(levels);
}

absl::StatusOr<GridPoint> Grid::Snap(double x, double y) const {
  if (!(x >= 0.0 && x < 1.0) || !(y >= 0.0 && y < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("coordinate (", x, ", ", y, ") outside [0, 1)^2"));
  }
  const double s = side();
  GridPoint p{static_cast<int32_t>(std::floor(x * s)),
              static_cast<int32_t>(std::floor(y * s))};
  // x * s can round up to s for x just below 1.
  if (p.ix >= side()) p.ix = side() - 1;
  if (p.iy >= side()) p.iy = side() - 1;
  return p;
}

absl::StatusOr<CellId> Grid::ContainingCell(GridPoint p, int level) const {
  if (level < 0 || level > levels_) {
    return absl::OutOfRangeError(
        absl::StrCat("level ", level, " outside [0, ", levels_, "]"));
  }
  if (!Contains(p)) {
    return absl::InvalidArgumentError("grid point outside the grid");
  }
  const int shift = levels_ - level;
  return CellId{level, p.ix >> shift, p.iy >> shift};
}

absl::StatusOr<std::array<CellId, 4>> Grid::Children(
    const CellId& cell) const {
  if (cell.level < 0 || cell.level >= levels_) {
    return absl::OutOfRangeError(
        absl::StrCat("cell at level ", cell.level, " has no children"));
  }
  const int next = cell.level + 1;
  const int32_t x = 2 * cell.cx;
  const int32_t y = 2 * cell.cy;
  return std::array<CellId, 4>{CellId{next, x, y}, CellId{next, x + 1, y},
                               CellId{next, x, y + 1},
                               CellId{next, x + 1, y + 1}};
}

absl::StatusOr<CellId> Grid::Parent(const CellId& cell) const {
  if (cell.level <= 0 || cell.level > levels_) {
    return absl::OutOfRangeError(
        absl::StrCat("cell at level ", cell.level, " has no parent"));
  }
  return CellId{cell.level - 1, cell.cx >> 1, cell.cy >> 1};
}

double Grid::Distance(GridPoint a, GridPoint b) const {
  return static_cast<double>(StepDistance(a, b)) * spacing();
}

int64_t Grid::StepDistance(GridPoint a, GridPoint b) {
  return std::llabs(int64_t{a.ix} - b.ix) + std::llabs(int64_t{a.iy} - b.iy);
}

}  // namespace dpemd
