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

// Geometry of the dyadic grid over the half-open unit square.
//
// A grid of side 2^L has points (ix / side, iy / side). Cells at level i
// tile the square into 2^i x 2^i half-open squares, so level 0 is the whole
// square and level L cells coincide with grid points.

#ifndef DPEMD_GRID_H_
#define DPEMD_GRID_H_

#include <array>
#include <cstddef>
#include <cstdint>

#include "absl/status/statusor.h"

namespace dpemd {

struct GridPoint {
  int32_t ix = 0;
  int32_t iy = 0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct CellId {
  int level = 0;
  int32_t cx = 0;
  int32_t cy = 0;

  friend bool operator==(const CellId&, const CellId&) = default;
};

constexpr int32_t SideAtLevel(int level) { return int32_t{1} << level; }
constexpr size_t CellsAtLevel(int level) { return size_t{1} << (2 * level); }

// Row-major position of a cell within its level: by cy, then by cx.
constexpr size_t CellIndex(const CellId& cell) {
  return static_cast<size_t>(cell.cy) * SideAtLevel(cell.level) + cell.cx;
}
constexpr CellId CellAt(int level, size_t index) {
  const size_t side = static_cast<size_t>(SideAtLevel(level));
  return CellId{level, static_cast<int32_t>(index % side),
                static_cast<int32_t>(index / side)};
}

// Largest grid exponent supported (side 32768).
inline constexpr int kMaxGridLevels = 15;

class Grid {
 public:
  // `side` must be a power of two between 1 and 2^kMaxGridLevels.
  static absl::StatusOr<Grid> Create(int64_t side);
  static Grid WithLevels(int levels);

  int levels() const { return levels_; }
  int32_t side() const { return SideAtLevel(levels_); }
  double spacing() const { return 1.0 / side(); }
  size_t num_points() const { return CellsAtLevel(levels_); }

  bool Contains(GridPoint p) const {
    return p.ix >= 0 && p.iy >= 0 && p.ix < side() && p.iy < side();
  }
  size_t Index(GridPoint p) const {
    return static_cast<size_t>(p.iy) * side() + p.ix;
  }
  GridPoint Point(size_t index) const {
    return GridPoint{static_cast<int32_t>(index % side()),
                     static_cast<int32_t>(index / side())};
  }

  // (floor(x * side), floor(y * side)); coordinates must lie in [0, 1).
  absl::StatusOr<GridPoint> Snap(double x, double y) const;

  absl::StatusOr<CellId> ContainingCell(GridPoint p, int level) const;

  // Children in the order (0,0), (1,0), (0,1), (1,1) relative to 2*c.
  absl::StatusOr<std::array<CellId, 4>> Children(const CellId& cell) const;
  absl::StatusOr<CellId> Parent(const CellId& cell) const;

  // Grid point with the smallest coordinates inside `cell`.
  GridPoint CellCorner(const CellId& cell) const {
    const int shift = levels_ - cell.level;
    return GridPoint{cell.cx << shift, cell.cy << shift};
  }

  // L1 distance between two points in unit-square coordinates.
  double Distance(GridPoint a, GridPoint b) const;
  // Same distance counted in grid steps.
  static int64_t StepDistance(GridPoint a, GridPoint b);

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  explicit Grid(int levels) : levels_(levels) {}

  int levels_ = 0;
};

}  // namespace dpemd

#endif  // DPEMD_GRID_H_
