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

#include <cmath>

#include "dpemd/simd/kernels.h"

namespace dpemd::simd {
namespace {

void AxpyScalar(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double DotScalar(const double* x, const double* y, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double SumScalar(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double AbsSumScalar(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += std::fabs(x[i]);
  return acc;
}

double SumMinScalar(const double* x, const double* y, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] < y[i] ? x[i] : y[i];
  return acc;
}

// Column pairs are summed first so that the AVX2 variant, which adds the two
// rows vertically before the horizontal pair add, produces identical bits.
void Pool2x2Scalar(const double* top, const double* bottom, double* out,
                   size_t out_n) {
  for (size_t j = 0; j < out_n; ++j) {
    out[j] = (top[2 * j] + bottom[2 * j]) + (top[2 * j + 1] + bottom[2 * j + 1]);
  }
}

}  // namespace

const KernelTable& ScalarKernels() {
  static const KernelTable table = {
      .name = "scalar",
      .axpy = AxpyScalar,
      .dot = DotScalar,
      .sum = SumScalar,
      .abs_sum = AbsSumScalar,
      .sum_min = SumMinScalar,
      .pool2x2 = Pool2x2Scalar,
  };
  return table;
}

}  // namespace dpemd::simd
