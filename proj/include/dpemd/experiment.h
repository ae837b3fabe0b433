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

// Seeded experiment sweeps over (eps, n, grid size) with per-trial metric
// rows and confidence-interval summaries.

#ifndef DPEMD_EXPERIMENT_H_
#define DPEMD_EXPERIMENT_H_

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/aggregator.h"
#include "dpemd/distribution.h"
#include "dpemd/heatmap.h"
#include "dpemd/io.h"

namespace dpemd {

// Environment variable holding the worker count for sweeps.
inline constexpr char kWorkersEnv[] = "DPEMD_WORKERS";

// Positive value of DPEMD_WORKERS, else 1.
int WorkersFromEnv();

// Mixes a list of integers into one 64-bit seed.
uint64_t DeriveSeed(std::initializer_list<uint64_t> parts);

struct SweepConfig {
  std::vector<double> eps = {1.0};
  std::vector<int64_t> users = {200};
  std::vector<int> levels = {8};
  int64_t w = 20;
  AggregationMode mode = AggregationMode::kExperiment;
  std::optional<double> gamma;
  double sigma = 0.05;
  int trials = 10;
  uint64_t seed = 0;
  // Baseline thresholds in percent of cells.
  std::vector<double> thresholds = {0.001, 0.01, 0.1, 1.0};
  bool dense = false;
  // One shuffle run per scale B; empty disables the shuffle model.
  std::vector<int64_t> shuffle_scales;
  double shuffle_delta = 1e-5;

  // Synthetic mixture. The components are fixed by mixture_seed; users are
  // redrawn every trial.
  int gaussians = 10;
  int samples_per_user = 10;
  uint64_t mixture_seed = 0;
  // When set, users are sampled without replacement from this dataset
  // instead, and `levels` is ignored.
  std::shared_ptr<const Dataset> dataset;

  // Evaluate only the leading width x height block of the grid.
  std::optional<Region> region;
  size_t exact_emd_support = MetricOptions{}.exact_emd_support;
  bool record_timing = false;
  int workers = 1;
  // Writes trial-0 heatmaps as PGM when non-empty.
  std::string heatmap_dir;
};

struct SweepRow {
  std::string run_id;
  std::string algorithm;
  double eps = 0.0;
  int64_t n = 0;
  int64_t delta_grid = 0;
  int64_t w = 0;
  int trial = 0;
  MetricSet metrics;
  double wall_ms = 0.0;
  // Set when the algorithm failed; metrics are then NaN.
  std::string error;
};

struct SummaryRow {
  std::string run_id;
  std::string algorithm;
  double eps = 0.0;
  int64_t n = 0;
  int64_t delta_grid = 0;
  std::string metric;
  int64_t count = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Rows come out grouped by (eps, n, grid size) in config order, then by
// trial, then by algorithm, independent of the worker count.
absl::StatusOr<std::vector<SweepRow>> RunSweep(const SweepConfig& config);

// Mean and mean +- 1.96 standard errors of each metric over successful
// trials.
std::vector<SummaryRow> Summarize(std::span<const SweepRow> rows);

std::string SweepCsv(std::span<const SweepRow> rows);
std::string SummaryCsv(std::span<const SummaryRow> rows);

// The input restricted to the region and renormalized; uniform over the
// region if nothing is left.
SparseDist MaskToRegion(const SparseDist& p, Region region);

}  // namespace dpemd

#endif  // DPEMD_EXPERIMENT_H_
