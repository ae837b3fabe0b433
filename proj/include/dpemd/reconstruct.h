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

// Recovery of a nonnegative grid vector from noisy pyramid measurements.
//
// A top-w descent of the cell tree picks the cells whose measurements are
// kept; every other measurement is treated as zero. The vector is then fit
// by minimizing the L1 residual against the kept measurements. The fit uses
// one variable per kept finest-level cell plus one per cell dropped during
// the descent, which holds the whole mass of that cell's subtree.

#ifndef DPEMD_RECONSTRUCT_H_
#define DPEMD_RECONSTRUCT_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"
#include "dpemd/pyramid.h"
#include "dpemd/simplex.h"

namespace dpemd {

struct SupportSelection {
  int start_level = 0;
  // kept[i] holds S_i sorted by CellIndex.
  std::vector<std::vector<CellId>> kept;
  // dropped[i] holds children(S_{i-1}) minus S_i, sorted by CellIndex.
  std::vector<std::vector<CellId>> dropped;

  int levels() const { return static_cast<int>(kept.size()) - 1; }
  bool Contains(const CellId& cell) const;
  size_t size() const;
};

// Levels up to `start_level` keep every cell. Below it each level keeps the
// min(w, |T_i|) children of the previous selection with the largest values,
// ties going to the smaller CellIndex.
SupportSelection SelectSupport(const PyramidVec& y, int64_t w,
                               int start_level);

// y on the selected cells, zero elsewhere.
PyramidVec Restrict(const PyramidVec& y, const SupportSelection& sel);

struct FitResult {
  SparseDist estimate;
  // L1 residual over the measured levels (start_level and finer).
  double objective = 0.0;
  int64_t pivots = 0;
};

// Minimizes |y_hat - P s|_1 over s >= 0 in the reduced variable class.
// Only levels >= sel.start_level count; coarser levels are unmeasured. Mass
// of a dropped subtree is placed at the subtree's smallest grid point.
absl::StatusOr<FitResult> FitL1(const Grid& grid, const PyramidVec& y_hat,
                                const SupportSelection& sel,
                                const LpOptions& options = {});

// |y - P s|_1 summed over levels >= first_level.
double MeasuredResidual(const PyramidVec& y, const SparseDist& s,
                        int first_level);

struct ReconstructOptions {
  int64_t w = 20;
  int start_level = 0;
  LpOptions lp;
};

absl::StatusOr<FitResult> Reconstruct(const Grid& grid, const PyramidVec& y,
                                      const ReconstructOptions& options);

}  // namespace dpemd

#endif  // DPEMD_RECONSTRUCT_H_
