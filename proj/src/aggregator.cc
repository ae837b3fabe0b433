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

#include "dpemd/aggregator.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/emd.h"
#include "dpemd/reconstruct.h"

namespace dpemd {
namespace {

absl::Status CheckInputs(std::span<const SparseDist> dists) {
  if (dists.empty()) return absl::InvalidArgumentError("no input users");
  for (size_t i = 0; i < dists.size(); ++i) {
    if (!(dists[i].grid() == dists[0].grid())) {
      return absl::InvalidArgumentError(
          absl::StrCat("user ", i, " is on a different grid"));
    }
    if (absl::Status s = CheckUnitMass(dists[i]); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("user ", i, ": ", s.message()));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckEps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(absl::StrCat("eps must be positive: ",
                                                   eps));
  }
  return absl::OkStatus();
}

}  // namespace

double EffectiveGamma(const AggregationConfig& config) {
  if (config.gamma.has_value()) return *config.gamma;
  return config.mode == AggregationMode::kTheory ? kTheoryGamma
                                                 : kExperimentGamma;
}

int FirstMeasuredLevel(const AggregationConfig& config, int levels) {
  if (config.mode == AggregationMode::kTheory) return 0;
  return std::min(PeakLevel(config.w), levels);
}

absl::StatusOr<NoiseSchedule> ScheduleFor(const AggregationConfig& config,
                                          int levels) {
  return BudgetSchedule(config.eps, levels, config.w, EffectiveGamma(config),
                        FirstMeasuredLevel(config, levels));
}

Normalized Normalize(const SparseDist& s) {
  const double total = s.Total();
  if (total > 0.0) return Normalized{s.Scaled(1.0 / total), false};
  const Grid& grid = s.grid();
  std::vector<double> uniform(grid.num_points(),
                              1.0 / static_cast<double>(grid.num_points()));
  return Normalized{*SparseDist::FromDense(grid, uniform), true};
}

PyramidVec NoisyMeasurements(const SparseDist& sum,
                             const NoiseSchedule& schedule, Rng& rng,
                             bool disable_noise,
                             std::vector<std::vector<double>>* noise) {
  const Grid& grid = sum.grid();
  const std::vector<std::vector<double>> cells =
      CellSumPyramid(grid, sum.ToDense());
  PyramidVec y(grid.levels());
  if (noise != nullptr) noise->assign(grid.levels() + 1, {});
  for (int i = 0; i <= grid.levels(); ++i) {
    if (!schedule.Measured(i)) continue;
    const double scale = std::ldexp(1.0, -i);
    const double b = schedule.LaplaceScale(i);
    std::span<double> out = y.level(i);
    if (noise != nullptr) (*noise)[i].assign(out.size(), 0.0);
    for (size_t k = 0; k < out.size(); ++k) {
      const double nu = disable_noise ? 0.0 : rng.Laplace(b);
      if (noise != nullptr) (*noise)[i][k] = nu;
      out[k] = scale * (cells[i][k] + nu);
    }
  }
  return y;
}

absl::StatusOr<AggregateResult> AggregateSum(const SparseDist& sum,
                                             const AggregationConfig& config) {
  if (absl::Status s = CheckEps(config.eps); !s.ok()) return s;
  const Grid& grid = sum.grid();
  absl::StatusOr<NoiseSchedule> schedule = ScheduleFor(config, grid.levels());
  if (!schedule.ok()) return schedule.status();
  Rng rng({config.seed, kCentralStream});
  PyramidVec y = NoisyMeasurements(sum, *schedule, rng, config.disable_noise);
  ReconstructOptions options;
  options.w = config.w;
  options.start_level = schedule->first_level;
  options.lp = config.lp;
  absl::StatusOr<FitResult> fit = Reconstruct(grid, y, options);
  if (!fit.ok()) return fit.status();
  Normalized norm = Normalize(fit->estimate);
  return AggregateResult{std::move(norm.dist),
                         std::move(fit->estimate),
                         std::move(y),
                         *std::move(schedule),
                         norm.uniform_fallback,
                         fit->objective,
                         fit->pivots};
}

absl::StatusOr<AggregateResult> AggregateCentral(
    std::span<const SparseDist> dists, const AggregationConfig& config) {
  if (absl::Status s = CheckInputs(dists); !s.ok()) return s;
  absl::StatusOr<SparseDist> sum = SumDists(dists);
  if (!sum.ok()) return sum.status();
  return AggregateSum(*sum, config);
}

absl::StatusOr<SparseDist> Coreset(const Grid& grid,
                                   std::span<const GridPoint> points,
                                   const AggregationConfig& config) {
  if (points.empty()) return absl::InvalidArgumentError("no input points");
  std::vector<SparseDist::Entry> entries;
  entries.reserve(points.size());
  for (const GridPoint& p : points) entries.push_back({p, 1.0});
  absl::StatusOr<SparseDist> sum =
      SparseDist::FromEntries(grid, std::move(entries));
  if (!sum.ok()) return sum.status();
  absl::StatusOr<AggregateResult> result = AggregateSum(*sum, config);
  if (!result.ok()) return result.status();
  return std::move(result->unnormalized);
}

int DenseLevel(double eps, int64_t n, int levels) {
  const double budget = eps * static_cast<double>(n);
  int l = 0;
  while (l < levels && std::ldexp(1.0, 2 * (l + 1)) <= budget) ++l;
  return l;
}

absl::StatusOr<DenseResult> AggregateDense(std::span<const SparseDist> dists,
                                           double eps, uint64_t seed,
                                           bool disable_noise) {
  if (absl::Status s = CheckEps(eps); !s.ok()) return s;
  if (absl::Status s = CheckInputs(dists); !s.ok()) return s;
  const Grid& grid = dists[0].grid();
  const int level =
      DenseLevel(eps, static_cast<int64_t>(dists.size()), grid.levels());
  const Grid coarse = Grid::WithLevels(level);
  const int shift = grid.levels() - level;

  std::vector<double> noisy(coarse.num_points(), 0.0);
  for (const SparseDist& d : dists) {
    for (const SparseDist::Entry& e : d.entries()) {
      noisy[coarse.Index({e.point.ix >> shift, e.point.iy >> shift})] +=
          e.mass;
    }
  }
  Rng rng({seed, kDenseStream});
  if (!disable_noise) {
    for (double& v : noisy) v += rng.Laplace(1.0 / eps);
  }
  absl::StatusOr<std::vector<double>> fit = NearestNonnegative(coarse, noisy);
  if (!fit.ok()) return fit.status();

  std::vector<SparseDist::Entry> entries;
  for (size_t k = 0; k < fit->size(); ++k) {
    if ((*fit)[k] <= 0.0) continue;
    const GridPoint p = coarse.Point(k);
    entries.push_back({{p.ix << shift, p.iy << shift}, (*fit)[k]});
  }
  absl::StatusOr<SparseDist> est =
      SparseDist::FromEntries(grid, std::move(entries));
  if (!est.ok()) return est.status();
  Normalized norm = Normalize(*est);
  return DenseResult{std::move(norm.dist), *std::move(est), level,
                     norm.uniform_fallback};
}

size_t ThresholdCount(double pct, size_t cells) {
  const double raw = std::ceil(pct / 100.0 * static_cast<double>(cells) -
                               1e-9);
  if (!(raw > 0.0)) return 0;
  return std::min(cells, static_cast<size_t>(raw));
}

absl::StatusOr<Normalized> BaselineLaplace(std::span<const SparseDist> dists,
                                           const BaselineConfig& config) {
  if (absl::Status s = CheckEps(config.eps); !s.ok()) return s;
  if (absl::Status s = CheckInputs(dists); !s.ok()) return s;
  if (config.threshold_pct.has_value() &&
      !(*config.threshold_pct >= 0.0 && *config.threshold_pct <= 100.0)) {
    return absl::InvalidArgumentError("threshold must lie in [0, 100]");
  }
  const Grid& grid = dists[0].grid();
  std::vector<double> cells(grid.num_points(), 0.0);
  for (const SparseDist& d : dists) {
    for (const SparseDist::Entry& e : d.entries()) {
      cells[grid.Index(e.point)] += e.mass;
    }
  }
  Rng rng({config.seed, kBaselineStream});
  for (double& v : cells) {
    if (!config.disable_noise) v += rng.Laplace(1.0 / config.eps);
    v = std::max(v, 0.0);
  }
  if (config.threshold_pct.has_value()) {
    const size_t keep = ThresholdCount(*config.threshold_pct, cells.size());
    if (keep < cells.size()) {
      std::vector<size_t> order(cells.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::nth_element(order.begin(), order.begin() + keep, order.end(),
                       [&](size_t a, size_t b) {
                         if (cells[a] != cells[b]) return cells[a] > cells[b];
                         return a < b;
                       });
      for (size_t k = keep; k < order.size(); ++k) cells[order[k]] = 0.0;
    }
  }
  absl::StatusOr<SparseDist> est = SparseDist::FromDense(grid, cells);
  if (!est.ok()) return est.status();
  return Normalize(*est);
}

}  // namespace dpemd
