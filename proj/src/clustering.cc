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

#include "dpemd/clustering.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpemd {
namespace {

double NearestDistance(const Grid& grid, GridPoint p,
                       std::span<const GridPoint> centers) {
  double best = std::numeric_limits<double>::infinity();
  for (const GridPoint& c : centers) {
    best = std::min(best, grid.Distance(p, c));
  }
  return best;
}

absl::Status CheckCenters(const Grid& grid,
                          std::span<const GridPoint> centers) {
  if (centers.empty()) return absl::InvalidArgumentError("no centers");
  for (const GridPoint& c : centers) {
    if (!grid.Contains(c)) {
      return absl::InvalidArgumentError(
          absl::StrCat("center (", c.ix, ", ", c.iy, ") is off the grid"));
    }
  }
  return absl::OkStatus();
}

int64_t Binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r > static_cast<long double>(std::numeric_limits<int64_t>::max())
             ? std::numeric_limits<int64_t>::max()
             : static_cast<int64_t>(std::llround(r));
}

// Distance from every support point of x to every candidate.
std::vector<double> DistanceTable(const SparseDist& x,
                                  std::span<const GridPoint> candidates) {
  std::vector<double> table(x.size() * candidates.size());
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t c = 0; c < candidates.size(); ++c) {
      table[i * candidates.size() + c] =
          x.grid().Distance(x.entries()[i].point, candidates[c]);
    }
  }
  return table;
}

double TableCost(const SparseDist& x, const std::vector<double>& table,
                 size_t num_candidates, std::span<const int> chosen) {
  double total = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c : chosen) best = std::min(best, table[i * num_candidates + c]);
    total += x.entries()[i].mass * best;
  }
  return total;
}

}  // namespace

absl::StatusOr<double> CostPoints(const Grid& grid,
                                  std::span<const GridPoint> points,
                                  std::span<const GridPoint> centers) {
  if (absl::Status s = CheckCenters(grid, centers); !s.ok()) return s;
  double total = 0.0;
  for (const GridPoint& p : points) {
    if (!grid.Contains(p)) return absl::InvalidArgumentError("point off grid");
    total += NearestDistance(grid, p, centers);
  }
  return total;
}

absl::StatusOr<double> CostVec(const SparseDist& x,
                               std::span<const GridPoint> centers) {
  if (absl::Status s = CheckCenters(x.grid(), centers); !s.ok()) return s;
  double total = 0.0;
  for (const SparseDist::Entry& e : x.entries()) {
    total += e.mass * NearestDistance(x.grid(), e.point, centers);
  }
  return total;
}

std::vector<GridPoint> CandidateCenters(const Grid& grid, int level) {
  level = std::clamp(level, 0, grid.levels());
  std::vector<GridPoint> out;
  out.reserve(CellsAtLevel(level));
  for (size_t k = 0; k < CellsAtLevel(level); ++k) {
    out.push_back(grid.CellCorner(CellAt(level, k)));
  }
  return out;
}

absl::Status ForEachSubset(
    int n, int k, const std::function<bool(std::span<const int>)>& fn) {
  if (k < 0 || k > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot pick ", k, " of ", n));
  }
  if (Binomial(n, k) > kMaxCenterSets) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "C(", n, ", ", k, ") exceeds the enumeration budget of ",
        kMaxCenterSets));
  }
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (!fn(idx)) return absl::OkStatus();
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return absl::OkStatus();
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

absl::StatusOr<KMedianSolution> BruteKMedian(
    const SparseDist& x, int k, std::span<const GridPoint> candidates) {
  if (k < 1) return absl::InvalidArgumentError("k must be >= 1");
  if (absl::Status s = CheckCenters(x.grid(), candidates); !s.ok()) return s;
  const int n = static_cast<int>(candidates.size());
  const int pick = std::min(k, n);
  const std::vector<double> table = DistanceTable(x, candidates);
  KMedianSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  absl::Status s = ForEachSubset(n, pick, [&](std::span<const int> chosen) {
    const double cost = TableCost(x, table, candidates.size(), chosen);
    if (cost < best.cost) {
      best.cost = cost;
      best.centers.clear();
      for (int c : chosen) best.centers.push_back(candidates[c]);
    }
    return true;
  });
  if (!s.ok()) return s;
  return best;
}

absl::StatusOr<CoresetReport> CoresetCheck(
    const Grid& grid, std::span<const GridPoint> points,
    const SparseDist& coreset, int k, double lambda, double eps,
    std::span<const GridPoint> candidates) {
  if (points.empty()) return absl::InvalidArgumentError("no points");
  if (!(coreset.grid() == grid)) {
    return absl::InvalidArgumentError("coreset is on a different grid");
  }
  if (k < 1 || !(lambda >= 0.0) || !(eps > 0.0)) {
    return absl::InvalidArgumentError("need k >= 1, lambda >= 0, eps > 0");
  }
  if (absl::Status s = CheckCenters(grid, candidates); !s.ok()) return s;
  std::vector<SparseDist::Entry> entries;
  for (const GridPoint& p : points) entries.push_back({p, 1.0});
  absl::StatusOr<SparseDist> data = SparseDist::FromEntries(grid, entries);
  if (!data.ok()) return data.status();

  const std::vector<double> data_table = DistanceTable(*data, candidates);
  const std::vector<double> core_table = DistanceTable(coreset, candidates);
  CoresetReport report;
  report.k = k;
  report.lambda = lambda;
  report.eps = eps;
  double worst = -std::numeric_limits<double>::infinity();
  double worst_raw = 0.0;
  const int pick = std::min<int>(k, static_cast<int>(candidates.size()));
  absl::Status s = ForEachSubset(
      static_cast<int>(candidates.size()), pick,
      [&](std::span<const int> chosen) {
        const double truth =
            TableCost(*data, data_table, candidates.size(), chosen);
        const double approx =
            TableCost(coreset, core_table, candidates.size(), chosen);
        const double dev = std::fabs(approx - truth);
        worst_raw = std::max(worst_raw, dev);
        worst = std::max(worst, dev - lambda * truth);
        ++report.center_sets;
        return true;
      });
  if (!s.ok()) return s;
  report.kappa = std::max(worst, 0.0);
  report.max_deviation = worst_raw;
  report.fitted_c = report.kappa * eps / std::sqrt(static_cast<double>(k));
  return report;
}

}  // namespace dpemd
