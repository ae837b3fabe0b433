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

// Dense tableau simplex for small standard-form LPs
//
//   minimize c'x  subject to  A x = b,  x >= 0,
//
// started from a caller-supplied feasible basis. Pivoting follows Bland's
// rule, so degenerate problems terminate.

#ifndef DPEMD_SIMPLEX_H_
#define DPEMD_SIMPLEX_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace dpemd {

struct LinearProgram {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // rows x cols, row-major
  std::vector<double> b;
  std::vector<double> c;

  LinearProgram(int rows, int cols)
      : rows(rows),
        cols(cols),
        a(static_cast<size_t>(rows) * cols, 0.0),
        b(rows, 0.0),
        c(cols, 0.0) {}
  double& at(int r, int j) { return a[static_cast<size_t>(r) * cols + j]; }
};

struct LpOptions {
  double tolerance = 1e-9;
  int64_t max_pivots = 200000;
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
  int64_t pivots = 0;
};

// `basis[r]` names the column that is basic in row r. Those columns must
// form an identity matrix and b must be nonnegative. Fails with
// ResourceExhausted when the pivot cap is hit and with FailedPrecondition
// when the problem is unbounded.
absl::StatusOr<LpSolution> SolveFromBasis(const LinearProgram& lp,
                                          std::span<const int> basis,
                                          const LpOptions& options = {});

}  // namespace dpemd

#endif  // DPEMD_SIMPLEX_H_
