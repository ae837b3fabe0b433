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

#include "dpemd/heatmap.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/emd.h"
#include "dpemd/grid.h"
#include "dpemd/pyramid.h"
#include "dpemd/simd/kernels.h"

namespace dpemd {
namespace {

absl::Status CheckSigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive: ", sigma));
  }
  return absl::OkStatus();
}

// Symmetric kernel taps k[-radius..radius] stored at offset radius.
std::vector<double> KernelTaps(double sigma, int32_t side, int32_t radius) {
  std::vector<double> taps(2 * static_cast<size_t>(radius) + 1);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int32_t d = -radius; d <= radius; ++d) {
    const double x = static_cast<double>(d) / side;
    taps[d + radius] = std::exp(-x * x * inv);
  }
  return taps;
}

// out += separable blur of src (width x height) with the given taps, both
// passes clipped to the raster.
void SeparableBlur(const std::vector<double>& src, size_t width,
                   size_t height, const std::vector<double>& taps,
                   int32_t radius, std::vector<double>& out) {
  std::vector<double> rows(width * height, 0.0);
  std::vector<bool> row_used(height, false);
  for (size_t y = 0; y < height; ++y) {
    std::span<double> dst(rows.data() + y * width, width);
    for (size_t x = 0; x < width; ++x) {
      const double v = src[y * width + x];
      if (v == 0.0) continue;
      row_used[y] = true;
      const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(x) - radius);
      const int64_t hi = std::min<int64_t>(width - 1,
                                           static_cast<int64_t>(x) + radius);
      const double* k = taps.data() + (lo - static_cast<int64_t>(x) + radius);
      simd::Axpy(v, std::span<const double>(k, hi - lo + 1),
                 dst.subspan(lo, hi - lo + 1));
    }
  }
  for (size_t y = 0; y < height; ++y) {
    if (!row_used[y]) continue;
    std::span<const double> row(rows.data() + y * width, width);
    const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(y) - radius);
    const int64_t hi = std::min<int64_t>(height - 1,
                                         static_cast<int64_t>(y) + radius);
    for (int64_t t = lo; t <= hi; ++t) {
      simd::Axpy(taps[t - static_cast<int64_t>(y) + radius], row,
                 std::span<double>(out.data() + t * width, width));
    }
  }
}

// Sum of the clipped taps around each position of a line of length n.
std::vector<double> ClippedNormalizers(const std::vector<double>& taps,
                                       int32_t radius, size_t n) {
  std::vector<double> z(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(i) - radius);
    const int64_t hi =
        std::min<int64_t>(n - 1, static_cast<int64_t>(i) + radius);
    for (int64_t j = lo; j <= hi; ++j) {
      z[i] += taps[j - static_cast<int64_t>(i) + radius];
    }
  }
  return z;
}

int32_t NextPowerOfTwo(size_t n) {
  int32_t s = 1;
  while (static_cast<size_t>(s) < n) s <<= 1;
  return s;
}

}  // namespace

int32_t KernelRadius(double sigma, int32_t side) {
  const double r = std::ceil(6.0 * sigma * side);
  if (!(r >= 1.0)) return 1;
  return static_cast<int32_t>(std::min<double>(r, 4.0 * side));
}

absl::StatusOr<HeatmapGrid> RenderHeatmap(const SparseDist& p, double sigma) {
  const int32_t side = p.grid().side();
  return RenderHeatmap(p, sigma, Region{side, side});
}

absl::StatusOr<HeatmapGrid> RenderHeatmap(const SparseDist& p, double sigma,
                                          Region region) {
  if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
  const int32_t side = p.grid().side();
  if (region.width < 1 || region.height < 1 || region.width > side ||
      region.height > side) {
    return absl::InvalidArgumentError(absl::StrCat(
        "region ", region.width, "x", region.height, " does not fit a grid of side ",
        side));
  }
  const size_t width = static_cast<size_t>(region.width);
  const size_t height = static_cast<size_t>(region.height);
  const int32_t radius = KernelRadius(sigma, side);
  const std::vector<double> taps = KernelTaps(sigma, side, radius);
  const std::vector<double> zx = ClippedNormalizers(taps, radius, width);
  const std::vector<double> zy = ClippedNormalizers(taps, radius, height);

  std::vector<double> src(width * height, 0.0);
  for (const SparseDist::Entry& e : p.entries()) {
    if (e.point.ix >= region.width || e.point.iy >= region.height) {
      return absl::InvalidArgumentError(
          absl::StrCat("mass at (", e.point.ix, ", ", e.point.iy,
                       ") lies outside the region"));
    }
    src[e.point.iy * width + e.point.ix] =
        e.mass / (zx[e.point.ix] * zy[e.point.iy]);
  }
  HeatmapGrid out;
  out.width = width;
  out.height = height;
  out.spacing = 1.0 / side;
  out.sigma = sigma;
  out.values.assign(width * height, 0.0);
  SeparableBlur(src, width, height, taps, radius, out.values);
  out.normalized = std::fabs(p.Total() - 1.0) <= 1e-9;
  return out;
}

absl::StatusOr<HeatmapGrid> RenderHeatmapPadded(const SparseDist& p,
                                                double sigma, int32_t pad) {
  if (absl::Status s = CheckSigma(sigma); !s.ok()) return s;
  if (pad < 0) return absl::InvalidArgumentError("pad must be nonnegative");
  const int32_t side = p.grid().side();
  const size_t extent = static_cast<size_t>(side) + 2 * static_cast<size_t>(pad);
  const std::vector<double> taps = KernelTaps(sigma, side, pad);
  double line = 0.0;
  for (double t : taps) line += t;
  const double z = line * line;

  std::vector<double> src(extent * extent, 0.0);
  for (const SparseDist::Entry& e : p.entries()) {
    src[(e.point.iy + pad) * extent + (e.point.ix + pad)] = e.mass / z;
  }
  HeatmapGrid out;
  out.width = extent;
  out.height = extent;
  out.spacing = 1.0 / side;
  out.sigma = sigma;
  out.values.assign(extent * extent, 0.0);
  SeparableBlur(src, extent, extent, taps, pad, out.values);
  out.normalized = std::fabs(p.Total() - 1.0) <= 1e-9;
  return out;
}

double Similarity(std::span<const double> a, std::span<const double> b) {
  return simd::SumMin(a, b);
}

double TotalVariation(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (size_t i = 0; i < a.size(); ++i) total += std::fabs(a[i] - b[i]);
  return 0.5 * total;
}

double Pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = simd::Sum(a) / n;
  const double mb = simd::Sum(b) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    return saa == 0.0 && sbb == 0.0 && ma == mb ? 1.0 : 0.0;
  }
  return sab / std::sqrt(saa * sbb);
}

double KlDivergence(std::span<const double> p, std::span<const double> q,
                    double smoothing) {
  const double n = static_cast<double>(p.size());
  const double zp = simd::Sum(p) + smoothing * n;
  const double zq = simd::Sum(q) + smoothing * n;
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + smoothing) / zp;
    const double qi = (q[i] + smoothing) / zq;
    if (pi > 0.0) total += pi * std::log(pi / qi);
  }
  return std::max(total, 0.0);
}

absl::StatusOr<HeatmapEmd> HeatmapEmdDistance(const HeatmapGrid& a,
                                              const HeatmapGrid& b,
                                              size_t exact_support) {
  if (a.width != b.width || a.height != b.height) {
    return absl::InvalidArgumentError("heatmap shapes differ");
  }
  const double ma = simd::Sum(a.values);
  const double mb = simd::Sum(b.values);
  std::vector<double> scaled = b.values;
  if (mb > 0.0 && ma > 0.0) {
    for (double& v : scaled) v *= ma / mb;
  }
  size_t support = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    support += (a.values[i] > 0.0) + (scaled[i] > 0.0);
  }
  if (support <= exact_support && ma > 0.0 && mb > 0.0) {
    absl::StatusOr<double> exact =
        LatticeEmd(a.values, scaled, a.width, a.height, a.spacing);
    if (exact.ok()) return HeatmapEmd{*exact, false};
    if (exact.status().code() != absl::StatusCode::kResourceExhausted) {
      return exact.status();
    }
  }
  const int32_t side = NextPowerOfTwo(std::max(a.width, a.height));
  absl::StatusOr<Grid> grid = Grid::Create(side);
  if (!grid.ok()) return grid.status();
  std::vector<double> diff(grid->num_points(), 0.0);
  for (size_t y = 0; y < a.height; ++y) {
    for (size_t x = 0; x < a.width; ++x) {
      diff[y * side + x] = a.values[y * a.width + x] - scaled[y * a.width + x];
    }
  }
  absl::StatusOr<double> bound = PyramidL1(*grid, diff);
  if (!bound.ok()) return bound.status();
  return HeatmapEmd{*bound * side * a.spacing, true};
}

absl::StatusOr<MetricSet> CompareHeatmaps(const HeatmapGrid& truth,
                                          const HeatmapGrid& estimate,
                                          const MetricOptions& options) {
  if (truth.width != estimate.width || truth.height != estimate.height) {
    return absl::InvalidArgumentError(absl::StrCat(
        "heatmap shapes differ: ", truth.width, "x", truth.height, " vs ",
        estimate.width, "x", estimate.height));
  }
  MetricSet m;
  m.sim = Similarity(truth.values, estimate.values);
  m.pearson = Pearson(truth.values, estimate.values);
  m.kl = KlDivergence(truth.values, estimate.values, options.kl_smoothing);
  absl::StatusOr<HeatmapEmd> emd =
      HeatmapEmdDistance(truth, estimate, options.exact_emd_support);
  if (!emd.ok()) return emd.status();
  m.emd = emd->value;
  m.emd_is_surrogate = emd->is_surrogate;
  return m;
}

}  // namespace dpemd
