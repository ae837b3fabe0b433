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

#include "dpemd/simplex.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/simd/kernels.h"

namespace dpemd {
namespace {

constexpr double kRatioTie = 1e-12;

absl::Status CheckBasis(const LinearProgram& lp, std::span<const int> basis,
                        double tol) {
  if (static_cast<int>(basis.size()) != lp.rows) {
    return absl::InvalidArgumentError("basis size differs from row count");
  }
  for (int r = 0; r < lp.rows; ++r) {
    const int j = basis[r];
    if (j < 0 || j >= lp.cols) {
      return absl::InvalidArgumentError(absl::StrCat("bad basis column ", j));
    }
    if (lp.b[r] < -tol) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative right-hand side in row ", r));
    }
    for (int k = 0; k < lp.rows; ++k) {
      const double want = k == r ? 1.0 : 0.0;
      if (lp.a[static_cast<size_t>(k) * lp.cols + j] != want) {
        return absl::InvalidArgumentError(
            absl::StrCat("basis column ", j, " is not a unit vector"));
      }
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LpSolution> SolveFromBasis(const LinearProgram& lp,
                                          std::span<const int> basis_in,
                                          const LpOptions& options) {
  const double tol = options.tolerance;
  if (absl::Status s = CheckBasis(lp, basis_in, tol); !s.ok()) return s;

  const int m = lp.rows;
  const int n = lp.cols;
  std::vector<double> t = lp.a;
  std::vector<double> rhs = lp.b;
  std::vector<int> basis(basis_in.begin(), basis_in.end());
  auto row = [&](int r) {
    return std::span<double>(t.data() + static_cast<size_t>(r) * n, n);
  };

  std::vector<double> reduced = lp.c;
  for (int r = 0; r < m; ++r) {
    const double cb = lp.c[basis[r]];
    if (cb != 0.0) simd::Axpy(-cb, row(r), reduced);
  }

  LpSolution out;
  while (true) {
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      if (reduced[j] < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) {
      const double coef = t[static_cast<size_t>(r) * n + enter];
      if (coef <= tol) continue;
      const double ratio = rhs[r] / coef;
      if (leave < 0 || ratio < best - kRatioTie ||
          (ratio <= best + kRatioTie && basis[r] < basis[leave])) {
        best = std::min(best, ratio);
        leave = r;
      }
    }
    if (leave < 0) {
      return absl::FailedPreconditionError("linear program is unbounded");
    }
    if (out.pivots >= options.max_pivots) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "simplex pivot cap ", options.max_pivots, " reached on a ", m, "x",
          n, " problem"));
    }
    ++out.pivots;

    std::span<double> pivot_row = row(leave);
    const double inv = 1.0 / pivot_row[enter];
    for (double& v : pivot_row) v *= inv;
    pivot_row[enter] = 1.0;
    rhs[leave] = std::max(0.0, rhs[leave] * inv);
    for (int r = 0; r < m; ++r) {
      if (r == leave) continue;
      double& head = t[static_cast<size_t>(r) * n + enter];
      const double f = head;
      if (f == 0.0) continue;
      simd::Axpy(-f, pivot_row, row(r));
      head = 0.0;
      rhs[r] = std::max(0.0, rhs[r] - f * rhs[leave]);
    }
    const double f = reduced[enter];
    simd::Axpy(-f, pivot_row, reduced);
    reduced[enter] = 0.0;
    basis[leave] = enter;
  }

  out.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r) out.x[basis[r]] = rhs[r];
  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += lp.c[j] * out.x[j];
  out.objective = obj;
  return out;
}

}  // namespace dpemd
