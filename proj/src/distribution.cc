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

#include "dpemd/distribution.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace dpemd {

absl::StatusOr<SparseDist> SparseDist::FromEntries(Grid grid,
                                                   std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (!grid.Contains(e.point)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "point (", e.point.ix, ", ", e.point.iy, ") outside grid of side ",
          grid.side()));
    }
    if (!std::isfinite(e.mass) || e.mass < 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid mass ", e.mass));
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [&grid](const Entry& a, const Entry& b) {
                     return grid.Index(a.point) < grid.Index(b.point);
                   });
  SparseDist out(grid);
  for (const Entry& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().point == e.point) {
      out.entries_.back().mass += e.mass;
    } else {
      out.entries_.push_back(e);
    }
  }
  std::erase_if(out.entries_, [](const Entry& e) { return e.mass == 0.0; });
  return out;
}

absl::StatusOr<SparseDist> SparseDist::FromDense(
    Grid grid, std::span<const double> dense) {
  if (dense.size() != grid.num_points()) {
    return absl::InvalidArgumentError(
        absl::StrCat("dense vector has ", dense.size(), " entries, grid has ",
                     grid.num_points()));
  }
  SparseDist out(grid);
  for (size_t i = 0; i < dense.size(); ++i) {
    const double m = dense[i];
    if (!std::isfinite(m) || m < 0.0) {
      return absl::InvalidArgumentError(absl::StrCat("invalid mass ", m));
    }
    if (m > 0.0) out.entries_.push_back(Entry{grid.Point(i), m});
  }
  return out;
}

SparseDist SparseDist::PointMass(Grid grid, GridPoint point, double mass) {
  SparseDist out(grid);
  if (mass > 0.0) out.entries_.push_back(Entry{point, mass});
  return out;
}

double SparseDist::Total() const {
  double total = 0.0;
  for (const Entry& e : entries_) total += e.mass;
  return total;
}

double SparseDist::MassAt(GridPoint point) const {
  const size_t key = grid_.Index(point);
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), key,
      [this](const Entry& e, size_t k) { return grid_.Index(e.point) < k; });
  if (it != entries_.end() && it->point == point) return it->mass;
  return 0.0;
}

std::vector<double> SparseDist::ToDense() const {
  std::vector<double> dense(grid_.num_points(), 0.0);
  for (const Entry& e : entries_) dense[grid_.Index(e.point)] = e.mass;
  return dense;
}

SparseDist SparseDist::Scaled(double factor) const {
  SparseDist out(grid_);
  if (factor <= 0.0) return out;
  out.entries_ = entries_;
  for (Entry& e : out.entries_) e.mass *= factor;
  std::erase_if(out.entries_, [](const Entry& e) { return e.mass == 0.0; });
  return out;
}

absl::Status CheckUnitMass(const SparseDist& dist, double tolerance) {
  const double total = dist.Total();
  if (std::fabs(total - 1.0) > tolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("distribution has total mass ", total, ", expected 1"));
  }
  return absl::OkStatus();
}

absl::StatusOr<SparseDist> SumDists(std::span<const SparseDist> dists) {
  if (dists.empty()) return absl::InvalidArgumentError("no distributions");
  const Grid grid = dists.front().grid();
  std::vector<double> dense(grid.num_points(), 0.0);
  for (const SparseDist& d : dists) {
    if (!(d.grid() == grid)) {
      return absl::InvalidArgumentError("distributions on different grids");
    }
    for (const auto& e : d.entries()) dense[grid.Index(e.point)] += e.mass;
  }
  return SparseDist::FromDense(grid, dense);
}

absl::StatusOr<std::vector<double>> DenseDifference(const SparseDist& a,
                                                    const SparseDist& b) {
  if (!(a.grid() == b.grid())) {
    return absl::InvalidArgumentError("distributions on different grids");
  }
  std::vector<double> diff = a.ToDense();
  for (const auto& e : b.entries()) diff[b.grid().Index(e.point)] -= e.mass;
  return diff;
}

}  // namespace dpemd
