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

// Gaussian-filtered heatmaps of grid distributions and the metrics used to
// compare them.
//
// Kernel widths are in unit-square coordinates, so sigma = 0.05 spans the
// same fraction of the map at every resolution. The kernel is cut off at
// ceil(6 sigma side) grid steps.

#ifndef DPEMD_HEATMAP_H_
#define DPEMD_HEATMAP_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"

namespace dpemd {

struct HeatmapGrid {
  size_t width = 0;
  size_t height = 0;
  // Distance between neighbouring cells in unit-square coordinates.
  double spacing = 1.0;
  double sigma = 0.0;
  bool normalized = false;
  // Row-major, width * height.
  std::vector<double> values;

  double at(size_t x, size_t y) const { return values[y * width + x]; }
};

// The leading width x height block of the grid. Points outside it carry no
// mass and are not rendered.
struct Region {
  int32_t width = 0;
  int32_t height = 0;
};

// Cut-off radius in grid steps for a kernel of width sigma.
int32_t KernelRadius(double sigma, int32_t side);

// Each source spreads unit weight over the region: the kernel from a source
// is normalized by its own sum over the region's cells.
absl::StatusOr<HeatmapGrid> RenderHeatmap(const SparseDist& p, double sigma);
absl::StatusOr<HeatmapGrid> RenderHeatmap(const SparseDist& p, double sigma,
                                          Region region);

// The grid extended by `pad` cells on every side with one shared
// normalizer, so no kernel mass is lost at the border when
// pad >= KernelRadius(sigma, side).
absl::StatusOr<HeatmapGrid> RenderHeatmapPadded(const SparseDist& p,
                                                double sigma, int32_t pad);

struct MetricOptions {
  // Largest combined support for which EMD is computed exactly; above it
  // the pyramid L1 upper bound is reported instead.
  size_t exact_emd_support = 2000;
  double kl_smoothing = 1e-12;
};

struct MetricSet {
  double sim = 0.0;
  double pearson = 0.0;
  double kl = 0.0;
  double emd = 0.0;
  bool emd_is_surrogate = false;
};

// Compares an estimate against the reference heatmap `truth`. Both must
// have the same shape. KL is KL(truth || estimate) after adding
// `kl_smoothing` to every cell of both and renormalizing.
absl::StatusOr<MetricSet> CompareHeatmaps(const HeatmapGrid& truth,
                                          const HeatmapGrid& estimate,
                                          const MetricOptions& options = {});

double Similarity(std::span<const double> a, std::span<const double> b);
double TotalVariation(std::span<const double> a, std::span<const double> b);
// Sample correlation. Defined as 1 for identical constant inputs and 0 when
// only one side is constant.
double Pearson(std::span<const double> a, std::span<const double> b);
double KlDivergence(std::span<const double> p, std::span<const double> q,
                    double smoothing);

// EMD between two heatmaps of equal shape, in unit-square coordinates. The
// estimate is rescaled to the reference's mass. Exact when the combined
// support is at most `exact_support`, otherwise the pyramid L1 bound.
struct HeatmapEmd {
  double value = 0.0;
  bool is_surrogate = false;
};
absl::StatusOr<HeatmapEmd> HeatmapEmdDistance(const HeatmapGrid& a,
                                              const HeatmapGrid& b,
                                              size_t exact_support);

}  // namespace dpemd

#endif  // DPEMD_HEATMAP_H_
