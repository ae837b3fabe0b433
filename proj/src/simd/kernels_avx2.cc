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

// Compiled with -mavx2 and -ffp-contract=off. No FMA is used so that the
// element-wise kernels round exactly like the scalar reference.

#include "dpemd/simd/kernels.h"

#if defined(__AVX2__)
#include <immintrin.h>

#include <cmath>

namespace dpemd::simd {
namespace {

double HorizontalSum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void AxpyAvx2(double a, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double DotAvx2(const double* x, const double* y, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(
        acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4),
                                             _mm256_loadu_pd(y + i + 4)));
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double SumAvx2(const double* x, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double AbsSumAvx2(const double* x, size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0,
                         _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i)));
    acc1 = _mm256_add_pd(
        acc1, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i + 4)));
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += std::fabs(x[i]);
  return acc;
}

double SumMinAvx2(const double* x, const double* y, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(
        acc0, _mm256_min_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_min_pd(_mm256_loadu_pd(x + i + 4),
                                             _mm256_loadu_pd(y + i + 4)));
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] < y[i] ? x[i] : y[i];
  return acc;
}

void Pool2x2Avx2(const double* top, const double* bottom, double* out,
                 size_t out_n) {
  size_t j = 0;
  for (; j + 4 <= out_n; j += 4) {
    __m256d a = _mm256_add_pd(_mm256_loadu_pd(top + 2 * j),
                              _mm256_loadu_pd(bottom + 2 * j));
    __m256d b = _mm256_add_pd(_mm256_loadu_pd(top + 2 * j + 4),
                              _mm256_loadu_pd(bottom + 2 * j + 4));
    // hadd yields [a0+a1, b0+b1, a2+a3, b2+b3]; reorder to output order.
    __m256d pairs = _mm256_hadd_pd(a, b);
    _mm256_storeu_pd(out + j, _mm256_permute4x64_pd(pairs, 0xD8));
  }
  for (; j < out_n; ++j) {
    out[j] = (top[2 * j] + bottom[2 * j]) + (top[2 * j + 1] + bottom[2 * j + 1]);
  }
}

}  // namespace

const KernelTable* Avx2Kernels() {
  static const KernelTable table = {
      .name = "avx2",
      .axpy = AxpyAvx2,
      .dot = DotAvx2,
      .sum = SumAvx2,
      .abs_sum = AbsSumAvx2,
      .sum_min = SumMinAvx2,
      .pool2x2 = Pool2x2Avx2,
  };
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  return &table;
}

}  // namespace dpemd::simd

#else  // !__AVX2__

namespace dpemd::simd {
const KernelTable* Avx2Kernels() { return nullptr; }
}  // namespace dpemd::simd

#endif
