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

// Private aggregation of per-user grid distributions.
//
// AggregateCentral releases Laplace-noised pyramid measurements of the sum
// of the inputs and reconstructs a sparse estimate from them. AggregateDense
// works on a coarsened grid and projects onto nonnegative vectors in the EMD
// norm. BaselineLaplace noises every cell independently. Each input must
// have unit mass: the privacy accounting assumes one user changes every
// level's cell sums by at most 1 in L1.

#ifndef DPEMD_AGGREGATOR_H_
#define DPEMD_AGGREGATOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"
#include "dpemd/noise.h"
#include "dpemd/pyramid.h"
#include "dpemd/simplex.h"

namespace dpemd {

enum class AggregationMode {
  // Measures every level; gamma defaults to kTheoryGamma.
  kTheory,
  // Skips levels coarser than PeakLevel(w); gamma defaults to
  // kExperimentGamma.
  kExperiment,
};

// RNG stream ids, so that one seed drives independent noise per mechanism.
inline constexpr uint64_t kCentralStream = 1;
inline constexpr uint64_t kDenseStream = 2;
inline constexpr uint64_t kBaselineStream = 3;
inline constexpr uint64_t kShuffleStream = 4;

struct AggregationConfig {
  double eps = 1.0;
  int64_t w = 20;
  AggregationMode mode = AggregationMode::kExperiment;
  // Unset means the mode's default.
  std::optional<double> gamma;
  uint64_t seed = 0;
  // Releases exact measurements. For tests only; the output is not private.
  bool disable_noise = false;
  LpOptions lp;
};

double EffectiveGamma(const AggregationConfig& config);
// First measured level for a grid with `levels` levels.
int FirstMeasuredLevel(const AggregationConfig& config, int levels);
absl::StatusOr<NoiseSchedule> ScheduleFor(const AggregationConfig& config,
                                          int levels);

struct Normalized {
  SparseDist dist;
  // Set when the input had no mass and the uniform distribution was
  // returned instead.
  bool uniform_fallback = false;
};

// s / |s|_1, or uniform over the grid when s is zero.
Normalized Normalize(const SparseDist& s);

struct AggregateResult {
  SparseDist normalized;
  SparseDist unnormalized;
  PyramidVec measurements;
  NoiseSchedule schedule;
  bool uniform_fallback = false;
  double fit_objective = 0.0;
  int64_t pivots = 0;
};

// Scaled noisy measurements 2^-i (P_i s + nu_i) at every measured level,
// with nu_i ~ Lap(1 / eps_i) per cell, drawn level by level in CellIndex
// order. If `noise` is non-null it receives the unscaled nu_i.
PyramidVec NoisyMeasurements(const SparseDist& sum,
                             const NoiseSchedule& schedule, Rng& rng,
                             bool disable_noise,
                             std::vector<std::vector<double>>* noise = nullptr);

// Runs the mechanism on a precomputed sum of inputs.
absl::StatusOr<AggregateResult> AggregateSum(const SparseDist& sum,
                                             const AggregationConfig& config);

absl::StatusOr<AggregateResult> AggregateCentral(
    std::span<const SparseDist> dists, const AggregationConfig& config);

// Unnormalized estimate from one-point users, for k-median coresets.
absl::StatusOr<SparseDist> Coreset(const Grid& grid,
                                   std::span<const GridPoint> points,
                                   const AggregationConfig& config);

struct DenseResult {
  SparseDist normalized;
  SparseDist unnormalized;
  // Coarse grid level l* and its side.
  int coarse_level = 0;
  bool uniform_fallback = false;
};

// Largest l with 4^l <= eps * n, clamped to [0, levels].
int DenseLevel(double eps, int64_t n, int levels);

absl::StatusOr<DenseResult> AggregateDense(std::span<const SparseDist> dists,
                                           double eps, uint64_t seed,
                                           bool disable_noise = false);

struct BaselineConfig {
  double eps = 1.0;
  // Percentage of cells kept after noising; unset keeps all.
  std::optional<double> threshold_pct;
  uint64_t seed = 0;
  bool disable_noise = false;
};

// Number of cells kept for a threshold of `pct` percent of `cells`.
size_t ThresholdCount(double pct, size_t cells);

absl::StatusOr<Normalized> BaselineLaplace(std::span<const SparseDist> dists,
                                           const BaselineConfig& config);

}  // namespace dpemd

#endif  // DPEMD_AGGREGATOR_H_
