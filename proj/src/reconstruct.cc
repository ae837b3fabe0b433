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

#include "dpemd/reconstruct.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpemd {
namespace {

bool ByIndex(const CellId& a, const CellId& b) {
  return CellIndex(a) < CellIndex(b);
}

// Position of `cell` in a CellIndex-sorted list, or -1.
int Find(const std::vector<CellId>& sorted, const CellId& cell) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), cell, ByIndex);
  if (it == sorted.end() || !(*it == cell)) return -1;
  return static_cast<int>(it - sorted.begin());
}

CellId AncestorAt(const CellId& cell, int level) {
  const int shift = cell.level - level;
  return CellId{level, cell.cx >> shift, cell.cy >> shift};
}

}  // namespace

bool SupportSelection::Contains(const CellId& cell) const {
  if (cell.level < 0 || cell.level > levels()) return false;
  return Find(kept[cell.level], cell) >= 0;
}

size_t SupportSelection::size() const {
  size_t total = 0;
  for (const auto& level : kept) total += level.size();
  return total;
}

SupportSelection SelectSupport(const PyramidVec& y, int64_t w,
                               int start_level) {
  const int levels = y.levels();
  SupportSelection sel;
  sel.start_level = std::clamp(start_level, 0, levels);
  sel.kept.resize(levels + 1);
  sel.dropped.resize(levels + 1);
  for (int i = 0; i <= sel.start_level; ++i) {
    const size_t cells = CellsAtLevel(i);
    sel.kept[i].reserve(cells);
    for (size_t k = 0; k < cells; ++k) sel.kept[i].push_back(CellAt(i, k));
  }
  for (int i = sel.start_level + 1; i <= levels; ++i) {
    std::vector<CellId> candidates;
    candidates.reserve(4 * sel.kept[i - 1].size());
    for (const CellId& p : sel.kept[i - 1]) {
      for (int32_t dy = 0; dy < 2; ++dy) {
        for (int32_t dx = 0; dx < 2; ++dx) {
          candidates.push_back(CellId{i, 2 * p.cx + dx, 2 * p.cy + dy});
        }
      }
    }
    const size_t take =
        static_cast<size_t>(std::min<int64_t>(w, candidates.size()));
    std::partial_sort(candidates.begin(), candidates.begin() + take,
                      candidates.end(), [&](const CellId& a, const CellId& b) {
                        const double va = y.at(a);
                        const double vb = y.at(b);
                        if (va != vb) return va > vb;
                        return CellIndex(a) < CellIndex(b);
                      });
    sel.kept[i].assign(candidates.begin(), candidates.begin() + take);
    sel.dropped[i].assign(candidates.begin() + take, candidates.end());
    std::sort(sel.kept[i].begin(), sel.kept[i].end(), ByIndex);
    std::sort(sel.dropped[i].begin(), sel.dropped[i].end(), ByIndex);
  }
  return sel;
}

PyramidVec Restrict(const PyramidVec& y, const SupportSelection& sel) {
  PyramidVec out(y.levels());
  for (int i = 0; i <= y.levels() && i <= sel.levels(); ++i) {
    for (const CellId& c : sel.kept[i]) out.at(c) = y.at(c);
  }
  return out;
}

absl::StatusOr<FitResult> FitL1(const Grid& grid, const PyramidVec& y_hat,
                                const SupportSelection& sel,
                                const LpOptions& options) {
  const int levels = grid.levels();
  if (y_hat.levels() != levels || sel.levels() != levels) {
    return absl::InvalidArgumentError(absl::StrCat(
        "level mismatch: grid ", levels, ", measurements ", y_hat.levels(),
        ", selection ", sel.levels()));
  }
  const int start = sel.start_level;

  // Rows: kept cells at measured levels.
  std::vector<int> row_offset(levels + 2, 0);
  for (int i = 0; i <= levels; ++i) {
    row_offset[i + 1] =
        row_offset[i] + (i >= start ? static_cast<int>(sel.kept[i].size()) : 0);
  }
  const int rows = row_offset[levels + 1];

  // Variables: kept finest cells, then dropped subtrees level by level.
  std::vector<CellId> vars(sel.kept[levels].begin(), sel.kept[levels].end());
  for (int i = start + 1; i <= levels; ++i) {
    vars.insert(vars.end(), sel.dropped[i].begin(), sel.dropped[i].end());
  }
  const int num_vars = static_cast<int>(vars.size());
  const int cols = num_vars + 2 * rows;

  LinearProgram lp(rows, cols);
  const int num_leaves = static_cast<int>(sel.kept[levels].size());
  for (int v = 0; v < num_vars; ++v) {
    const CellId& cell = vars[v];
    // A kept finest cell is its own row. A dropped cell appears only in the
    // rows of its kept ancestors and pays for its own unmeasured chain.
    const bool leaf = v < num_leaves;
    double own = 0.0;
    if (!leaf) {
      for (int j = cell.level; j <= levels; ++j) own += std::ldexp(1.0, -j);
    }
    lp.c[v] = own;
    const int last_row_level = leaf ? levels : cell.level - 1;
    for (int j = start; j <= last_row_level; ++j) {
      const CellId anc = AncestorAt(cell, j);
      const int pos = Find(sel.kept[j], anc);
      if (pos < 0) {
        return absl::InternalError("selection is not closed under parents");
      }
      lp.at(row_offset[j] + pos, v) = std::ldexp(1.0, -j);
    }
  }
  std::vector<int> basis(rows);
  for (int i = start; i <= levels; ++i) {
    for (size_t k = 0; k < sel.kept[i].size(); ++k) {
      const int r = row_offset[i] + static_cast<int>(k);
      const int u = num_vars + r;
      const int v = num_vars + rows + r;
      lp.c[u] = 1.0;
      lp.c[v] = 1.0;
      const double target = y_hat.at(sel.kept[i][k]);
      lp.at(r, u) = 1.0;
      lp.at(r, v) = -1.0;
      lp.b[r] = target;
      if (target < 0) {
        for (int j = 0; j < cols; ++j) lp.at(r, j) = -lp.at(r, j);
        lp.b[r] = -target;
        basis[r] = v;
      } else {
        basis[r] = u;
      }
    }
  }

  absl::StatusOr<LpSolution> sol = SolveFromBasis(lp, basis, options);
  if (!sol.ok()) {
    return absl::Status(sol.status().code(),
                        absl::StrCat("l1 fit with ", rows, " rows and ",
                                     num_vars, " mass variables: ",
                                     sol.status().message()));
  }
  std::vector<SparseDist::Entry> entries;
  for (int v = 0; v < num_vars; ++v) {
    if (sol->x[v] > 0.0) {
      entries.push_back({grid.CellCorner(vars[v]), sol->x[v]});
    }
  }
  absl::StatusOr<SparseDist> est =
      SparseDist::FromEntries(grid, std::move(entries));
  if (!est.ok()) return est.status();
  FitResult out{*std::move(est), 0.0, sol->pivots};
  out.objective = MeasuredResidual(y_hat, out.estimate, start);
  return out;
}

double MeasuredResidual(const PyramidVec& y, const SparseDist& s,
                        int first_level) {
  const PyramidVec ps = ApplyPyramid(s);
  double total = 0.0;
  for (int i = std::max(first_level, 0); i <= y.levels(); ++i) {
    const auto a = y.level(i);
    const auto b = ps.level(i);
    for (size_t k = 0; k < a.size(); ++k) total += std::fabs(a[k] - b[k]);
  }
  return total;
}

absl::StatusOr<FitResult> Reconstruct(const Grid& grid, const PyramidVec& y,
                                      const ReconstructOptions& options) {
  if (options.w < 1) return absl::InvalidArgumentError("w must be >= 1");
  const SupportSelection sel = SelectSupport(y, options.w,
                                             options.start_level);
  return FitL1(grid, Restrict(y, sel), sel, options.lp);
}

}  // namespace dpemd
