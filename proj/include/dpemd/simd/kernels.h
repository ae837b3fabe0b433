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

// Data-parallel inner loops used by the grid, heatmap and metric code.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2 variant. The active variant is chosen once at first use from the
// CPU's capabilities; setting DPEMD_SIMD=scalar in the environment forces the
// reference path. Element-wise kernels (Axpy, Pool2x2) are bit-identical
// across variants. Reductions may differ in the last few ulps because the
// vector variants keep several partial sums.

#ifndef DPEMD_SIMD_KERNELS_H_
#define DPEMD_SIMD_KERNELS_H_

#include <cstddef>
#include <span>
#include <string_view>

namespace dpemd::simd {

struct KernelTable {
  std::string_view name;
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, size_t n);
  double (*dot)(const double* x, const double* y, size_t n);
  double (*sum)(const double* x, size_t n);
  double (*abs_sum)(const double* x, size_t n);
  // Sum of element-wise minima.
  double (*sum_min)(const double* x, const double* y, size_t n);
  // out[j] = (top[2j] + bottom[2j]) + (top[2j+1] + bottom[2j+1]) for
  // j < out_n. Rows `top` and `bottom` hold 2 * out_n values.
  void (*pool2x2)(const double* top, const double* bottom, double* out,
                  size_t out_n);
};

const KernelTable& ScalarKernels();

// Returns nullptr when the binary was built without AVX2 support or the CPU
// does not provide AVX2.
const KernelTable* Avx2Kernels();

// The table selected for this process.
const KernelTable& ActiveKernels();

inline void Axpy(double a, std::span<const double> x, std::span<double> y) {
  ActiveKernels().axpy(a, x.data(), y.data(), x.size());
}
inline double Dot(std::span<const double> x, std::span<const double> y) {
  return ActiveKernels().dot(x.data(), y.data(), x.size());
}
inline double Sum(std::span<const double> x) {
  return ActiveKernels().sum(x.data(), x.size());
}
inline double AbsSum(std::span<const double> x) {
  return ActiveKernels().abs_sum(x.data(), x.size());
}
inline double SumMin(std::span<const double> x, std::span<const double> y) {
  return ActiveKernels().sum_min(x.data(), y.data(), x.size());
}

// Halves a row-major width x width grid into a (width/2) x (width/2) grid of
// 2x2 block sums. `width` must be even.
void Pool2x2Grid(std::span<const double> in, size_t width,
                 std::span<double> out);

}  // namespace dpemd::simd

#endif  // DPEMD_SIMD_KERNELS_H_
